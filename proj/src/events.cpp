#include "coroute/events.hpp"

#include <algorithm>

#include "coroute/error.hpp"
#include "json_codec.hpp"

namespace coroute {

MissionState apply_event(const MissionState& state, const ReplanEvent& event, double switch_time_s) {
  require(state.mission != nullptr, ErrorKind::invalid_argument, "event on an empty state");
  require(state.status != Status::failure, ErrorKind::contract_violation,
          "cannot apply an event to a failed mission");
  const Mission& old = *state.mission;

  Scenario scenario = old.scenario();
  for (const auto& t : event.add_tasks) {
    TaskPoint task = t;
    task.id = static_cast<int>(scenario.tasks.size());
    scenario.tasks.push_back(task);
  }
  TeamConfig team = old.team();
  if (event.set_team) {
    event.set_team->validate();
    team = *event.set_team;
  }

  MissionState next = state;
  const int unvisited = state.mission->num_tasks() - state.visited_count() +
                        static_cast<int>(event.add_tasks.size());
  MissionOptions options = old.options();
  options.horizon = state.step_count + 4 * (unvisited + team.num_uavs);
  next.mission = make_mission(std::move(scenario), team, options);
  next.visited.resize(static_cast<std::size_t>(next.mission->num_tasks()), 0);

  const double capacity = next.mission->scenario().fuel.capacity_kj;
  auto resize_fleet = [&](std::vector<AgentState>& fleet, AgentKind kind, int wanted) {
    for (auto& a : fleet) a.retired = a.index >= wanted;
    for (int i = static_cast<int>(fleet.size()); i < wanted; ++i) {
      AgentState a;
      a.kind = kind;
      a.index = i;
      a.node = kDepotNode;
      a.fuel_kj = capacity;
      a.clock_s = switch_time_s;
      a.busy_until_s = switch_time_s;
      fleet.push_back(a);
    }
  };
  resize_fleet(next.uavs, AgentKind::uav, team.num_uavs);
  resize_fleet(next.ugvs, AgentKind::ugv, team.num_ugvs);
  next.assignments.resize(next.ugvs.size());

  if (next.status == Status::success && !next.all_visited()) next.status = Status::running;
  if (next.status == Status::running) refresh(next);
  return next;
}

namespace codec {

nlohmann::json to_json(const ReplanEvent& e) {
  nlohmann::json j;
  j["trigger"] = e.trigger == TriggerKind::recharge_event ? "recharge_event" : "mission_time";
  j["value"] = e.trigger_value;
  auto tasks = nlohmann::json::array();
  for (const auto& t : e.add_tasks) tasks.push_back(to_json(t));
  j["add_tasks"] = tasks;
  if (e.set_team) j["team"] = to_json(*e.set_team);
  return j;
}

ReplanEvent event_from_json(const nlohmann::json& j) {
  ReplanEvent e;
  const auto trigger = j.at("trigger").get<std::string>();
  if (trigger == "recharge_event") {
    e.trigger = TriggerKind::recharge_event;
  } else if (trigger == "mission_time") {
    e.trigger = TriggerKind::mission_time;
  } else {
    fail(ErrorKind::invalid_argument, "unknown event trigger: " + trigger);
  }
  e.trigger_value = j.at("value").get<double>();
  if (j.contains("add_tasks")) {
    for (const auto& t : j.at("add_tasks")) e.add_tasks.push_back(task_from_json(t));
  }
  if (j.contains("team")) e.set_team = team_from_json(j.at("team"));
  return e;
}

}  // namespace codec

}  // namespace coroute
