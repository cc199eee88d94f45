#include "coroute/replan.hpp"

#include <cmath>

#include "coroute/error.hpp"
#include "coroute/rng.hpp"
#include "coroute/rollout.hpp"

namespace coroute {

void validate_events(const std::vector<ReplanEvent>& events) {
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    require(std::isfinite(e.trigger_value) && e.trigger_value >= 0, ErrorKind::invalid_argument,
            "event " + std::to_string(k) + ": trigger must be a finite non-negative value");
    if (e.trigger == TriggerKind::recharge_event) {
      require(e.trigger_value >= 1 && e.trigger_value == std::floor(e.trigger_value), ErrorKind::invalid_argument,
              "event " + std::to_string(k) + ": recharge-event trigger must be a positive integer");
    }
    if (e.set_team) e.set_team->validate();
    for (const auto& t : e.add_tasks) {
      require(std::isfinite(t.x) && std::isfinite(t.y), ErrorKind::invalid_argument,
              "event " + std::to_string(k) + ": added task has non-finite coordinates");
    }
    if (k > 0) {
      require(e.trigger == events[k - 1].trigger, ErrorKind::invalid_argument,
              "event triggers must all be of one kind");
      require(e.trigger_value > events[k - 1].trigger_value, ErrorKind::invalid_argument,
              "event triggers must be strictly increasing");
    }
  }
}

namespace {

bool triggered(const ReplanEvent& e, const MissionState& s, double service_end_s) {
  if (e.trigger == TriggerKind::recharge_event) return s.recharge_events >= static_cast<int>(e.trigger_value);
  return service_end_s >= e.trigger_value;
}

}  // namespace

ReplanResult dynamic_replan(const Scenario& initial, const TeamConfig& team, const MethodSpec& planner,
                            const std::vector<ReplanEvent>& events, std::uint64_t seed,
                            const MissionOptions& options) {
  planner.validate();
  validate_events(events);
  ReplanResult out;
  if (events.empty()) {
    out.route = run_method(planner, initial, team, seed, options);
    out.segments.push_back({-1, 0, static_cast<int>(out.route.steps.size()), 0.0, out.route});
    return out;
  }
  require(planner.uses_policy(), ErrorKind::invalid_argument,
          "planner " + planner.name + " cannot plan from a mid-mission state; use a drl_* planner");

  MissionOptions opts = options;
  opts.selection = planner.selection();
  MissionState s = reset(make_mission(initial, team, opts));
  const bool sample = planner.kind == MethodKind::drl_sample || planner.kind == MethodKind::drl_mf_sample;
  auto plan_from = [&](const MissionState& st, int k) {
    const DecodePolicy decode = sample ? DecodePolicy::sample(planner.samples, Rng::mix(planner.seed, seed, k + 1))
                                       : DecodePolicy::greedy();
    return rollout_from(st, *planner.policy, decode).best_route();
  };

  out.route.team = team;
  out.route.selection = opts.selection;
  out.route.horizon = s.mission->horizon();
  out.events.resize(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) out.events[k].event = static_cast<int>(k);
  out.segments.push_back({-1, 0, 0, 0.0, plan_from(s, -1)});

  std::size_t next = 0;
  while (s.status == Status::running) {
    ReplanSegment& seg = out.segments.back();
    require(seg.executed_steps < static_cast<int>(seg.plan.steps.size()), ErrorKind::contract_violation,
            "plan ended before the mission did");
    const TraceStep& planned = seg.plan.steps[static_cast<std::size_t>(seg.executed_steps)];
    require(s.active == planned.agent, ErrorKind::contract_violation, "plan diverged from the live mission");
    out.route.steps.push_back(record_step(s, planned.action));
    ++seg.executed_steps;
    if (planned.agent.kind != AgentKind::ugv) continue;

    const double service_end = s.ugvs[static_cast<std::size_t>(planned.agent.index)].clock_s;
    while (next < events.size() && triggered(events[next], s, service_end)) {
      EventOutcome& outcome = out.events[next];
      outcome.fired = true;
      outcome.before_step = static_cast<int>(out.route.steps.size());
      outcome.switch_time_s = service_end;
      try {
        s = apply_event(s, events[next], service_end);
      } catch (const Error& e) {
        outcome.message = std::string(to_string(e.kind())) + ": " + e.what();
        ++next;
        continue;
      }
      out.route.events.push_back({outcome.before_step, service_end, events[next]});
      if (s.status == Status::running) {
        RouteSolution plan = plan_from(s, static_cast<int>(next));
        outcome.feasible = plan.status == Status::success;
        if (!outcome.feasible) {
          outcome.message = "replanned mission fails (" + std::to_string(s.visited_count()) + " of " +
                            std::to_string(s.mission->num_tasks()) + " tasks visited at the switch)";
        }
        out.segments.push_back({static_cast<int>(next), outcome.before_step, 0, service_end, std::move(plan)});
      } else {
        outcome.feasible = s.status == Status::success;
        if (!outcome.feasible) outcome.message = "mission cannot continue after the event";
      }
      ++next;
    }
  }
  for (; next < events.size(); ++next) out.events[next].message = "mission ended before the trigger";
  finalize(out.route, s);
  return out;
}

}  // namespace coroute
