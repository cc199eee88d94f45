#include "coroute/trace.hpp"

#include <cmath>
#include <sstream>

#include "coroute/error.hpp"
#include "coroute/scenario_io.hpp"
#include "json_codec.hpp"

namespace coroute {

using nlohmann::json;

TraceStep record_step(MissionState& state, Action action) {
  require(state.active.has_value(), ErrorKind::contract_violation, "no active agent to record");
  TraceStep rec;
  rec.t = state.step_count;
  rec.agent = *state.active;
  rec.action = action;
  rec.reward_s = apply(state, action).reward_s;
  const auto& a = state.agent(rec.agent);
  rec.fuel_kj = a.fuel_kj;
  rec.clock_s = a.clock_s;
  return rec;
}

void finalize(RouteSolution& sol, const MissionState& state) {
  sol.status = state.status;
  sol.makespan_s = state.max_clock();
  sol.return_s = state.status == Status::running ? 0.0 : compute_return(state);
}

namespace {

void apply_events_at(MissionState& s, const RouteSolution& trace, int step) {
  for (const auto& ev : trace.events) {
    if (ev.before_step == step) s = apply_event(s, ev.event, ev.switch_time_s);
  }
}

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace

ReplayReport replay(const Scenario& scenario, const RouteSolution& trace, SelectionMode mode,
                    double tolerance) {
  ReplayReport rep;
  MissionOptions options;
  options.selection = mode;
  options.horizon = trace.horizon;
  MissionState s = reset(make_mission(scenario, trace.team, options));

  const int n = static_cast<int>(trace.steps.size());
  for (int i = 0; i < n; ++i) {
    const auto& rec = trace.steps[i];
    apply_events_at(s, trace, i);
    const std::string where = "step " + std::to_string(i) + ": ";
    if (s.status != Status::running) {
      rep.violations.push_back(where + "mission already terminated");
      break;
    }
    if (mode == SelectionMode::scripted) {
      if (!can_act(s, rec.agent)) {
        rep.violations.push_back(where + to_string(rec.agent) + " cannot act");
        break;
      }
      set_active(s, rec.agent);
    } else if (s.active != rec.agent) {
      rep.violations.push_back(where + "expected " + (s.active ? to_string(*s.active) : "none") +
                               ", trace has " + to_string(rec.agent));
      break;
    }
    if (rec.action.node < 0 || rec.action.node >= s.mission->num_nodes() ||
        !feasible_actions(s, rec.agent)[s.mission->action_index(rec.action)]) {
      rep.violations.push_back(where + to_string(rec.action) + " is infeasible for " +
                               to_string(rec.agent));
      break;
    }
    const double reward = apply(s, rec.action).reward_s;
    const auto& a = s.agent(rec.agent);
    if (!close(reward, rec.reward_s, tolerance)) rep.violations.push_back(where + "reward mismatch");
    if (!close(a.clock_s, rec.clock_s, tolerance)) rep.violations.push_back(where + "clock mismatch");
    if (!close(a.fuel_kj, rec.fuel_kj, tolerance)) rep.violations.push_back(where + "fuel mismatch");
  }
  if (rep.violations.empty()) apply_events_at(s, trace, n);

  rep.status = s.status;
  rep.makespan_s = s.max_clock();
  rep.return_s = s.status == Status::running ? 0.0 : compute_return(s);
  rep.visited = s.visited_count();
  rep.num_tasks = s.mission->num_tasks();
  if (rep.violations.empty() && trace.status != Status::running && s.status != trace.status) {
    rep.violations.push_back("final status differs from the recorded one");
  }
  rep.legal = rep.violations.empty();
  rep.final_state = std::move(s);
  return rep;
}

namespace {

std::string status_name(Status s) {
  switch (s) {
    case Status::running: return "running";
    case Status::success: return "success";
    case Status::failure: return "failure";
  }
  return "running";
}

Status parse_status(const std::string& s) {
  if (s == "running") return Status::running;
  if (s == "success") return Status::success;
  if (s == "failure") return Status::failure;
  fail(ErrorKind::invalid_argument, "unknown status: " + s);
}

Action parse_action(const std::string& s) {
  const auto colon = s.find(':');
  require(colon != std::string::npos, ErrorKind::invalid_argument, "bad action: " + s);
  const auto kind = s.substr(0, colon);
  int node = 0;
  try {
    node = std::stoi(s.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_argument, "bad action: " + s);
  }
  if (kind == "visit") return Action::visit(node);
  if (kind == "recharge") return Action::recharge(node);
  fail(ErrorKind::invalid_argument, "bad action: " + s);
}

}  // namespace

std::string trace_to_jsonl(const RouteSolution& sol) {
  std::ostringstream out;
  json header = {{"team", codec::to_json(sol.team)},
                 {"selection", to_string(sol.selection)},
                 {"horizon", sol.horizon},
                 {"status", status_name(sol.status)},
                 {"return_s", sol.return_s},
                 {"makespan_s", sol.makespan_s},
                 {"log_prob", sol.log_prob}};
  out << json{{"header", header}}.dump() << '\n';
  for (const auto& ev : sol.events) {
    out << json{{"event", codec::to_json(ev.event)},
                {"before_step", ev.before_step},
                {"switch_time_s", ev.switch_time_s}}
               .dump()
        << '\n';
  }
  for (const auto& st : sol.steps) {
    out << json{{"t", st.t},
                {"agent", to_string(st.agent)},
                {"action", to_string(st.action)},
                {"reward_s", st.reward_s},
                {"fuel_kj", st.fuel_kj},
                {"clock_s", st.clock_s}}
               .dump()
        << '\n';
  }
  return out.str();
}

RouteSolution trace_from_jsonl(const std::string& text) {
  RouteSolution sol;
  std::istringstream in(text);
  std::string line;
  bool seen_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("header")) {
        const auto& h = j.at("header");
        sol.team = codec::team_from_json(h.at("team"));
        sol.selection = parse_selection(h.at("selection").get<std::string>());
        sol.horizon = h.value("horizon", 0);
        sol.status = parse_status(h.at("status").get<std::string>());
        sol.return_s = h.at("return_s").get<double>();
        sol.makespan_s = h.at("makespan_s").get<double>();
        sol.log_prob = h.value("log_prob", 0.0);
        seen_header = true;
      } else if (j.contains("event")) {
        sol.events.push_back({j.at("before_step").get<int>(), j.at("switch_time_s").get<double>(),
                              codec::event_from_json(j.at("event"))});
      } else {
        TraceStep st;
        st.t = j.at("t").get<int>();
        st.agent = parse_agent(j.at("agent").get<std::string>());
        st.action = parse_action(j.at("action").get<std::string>());
        st.reward_s = j.at("reward_s").get<double>();
        st.fuel_kj = j.at("fuel_kj").get<double>();
        st.clock_s = j.at("clock_s").get<double>();
        sol.steps.push_back(st);
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::invalid_argument,
           "trace line " + std::to_string(lineno) + " is malformed: " + e.what());
    }
  }
  require(seen_header, ErrorKind::invalid_argument, "trace has no header record");
  return sol;
}

void save_trace(const RouteSolution& sol, const std::filesystem::path& path) {
  write_text_file(path, trace_to_jsonl(sol));
}

RouteSolution load_trace(const std::filesystem::path& path) {
  return trace_from_jsonl(read_text_file(path));
}

}  // namespace coroute
