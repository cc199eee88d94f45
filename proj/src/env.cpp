#include "coroute/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coroute/error.hpp"

namespace coroute {

std::string to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::sortie_wise: return "sortie";
    case SelectionMode::per_step: return "per-step";
    case SelectionMode::scripted: return "scripted";
  }
  return "sortie";
}

SelectionMode parse_selection(const std::string& name) {
  if (name == "sortie" || name == "sortie-wise") return SelectionMode::sortie_wise;
  if (name == "per-step" || name == "mf") return SelectionMode::per_step;
  if (name == "scripted") return SelectionMode::scripted;
  fail(ErrorKind::invalid_argument, "unknown agent selection mode: " + name);
}

std::string to_string(AgentRef a) {
  return (a.kind == AgentKind::uav ? "uav" : "ugv") + std::to_string(a.index);
}

AgentRef parse_agent(const std::string& name) {
  require(name.size() > 3 && (name.starts_with("uav") || name.starts_with("ugv")),
          ErrorKind::invalid_argument, "bad agent name: " + name);
  AgentRef a;
  a.kind = name.starts_with("uav") ? AgentKind::uav : AgentKind::ugv;
  try {
    a.index = std::stoi(name.substr(3));
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_argument, "bad agent name: " + name);
  }
  return a;
}

std::string to_string(Action a) {
  return (a.kind == ActionKind::visit ? "visit:" : "recharge:") + std::to_string(a.node);
}

Mission::Mission(Scenario scenario, TeamConfig team, MissionOptions options)
    : scenario_(std::move(scenario)), team_(team), options_(options) {
  scenario_.validate();
  team_.validate();
  num_nodes_ = static_cast<int>(scenario_.tasks.size()) + 1;
  const auto n = static_cast<std::size_t>(num_nodes_);
  ground_flag_.assign(n, 0);
  ground_flag_[kDepotNode] = 1;
  std::vector<int> road_node(n, -1);
  road_node[kDepotNode] = scenario_.depot;
  for (const auto& t : scenario_.tasks) {
    if (t.kind != TaskKind::ground) continue;
    const int node = node_of_task(t.id);
    ground_flag_[node] = 1;
    road_node[node] = *scenario_.road.node_at(t.pos());
  }
  for (int i = 0; i < num_nodes_; ++i) {
    if (ground_flag_[i]) ground_nodes_.push_back(i);
  }

  const double power = power_and_fuel(team_.v_a, 0.0, scenario_.fuel).power_w;
  flight_time_.resize(n * n);
  flight_fuel_.resize(n * n);
  for (int a = 0; a < num_nodes_; ++a) {
    for (int b = 0; b < num_nodes_; ++b) {
      const double t = distance(node_point(a), node_point(b)) / team_.v_a;
      flight_time_[a * n + b] = t;
      flight_fuel_[a * n + b] = power * t / 1000.0;
    }
  }

  road_time_.assign(n * n, std::numeric_limits<double>::quiet_NaN());
  for (int a : ground_nodes_) {
    const auto dist = scenario_.road.shortest_paths_from(road_node[a]);
    for (int b : ground_nodes_) {
      const double d = dist[road_node[b]];
      require(std::isfinite(d), ErrorKind::disconnected_network,
              "ground nodes " + std::to_string(a) + " and " + std::to_string(b) +
                  " are not connected by road");
      road_time_[a * n + b] = road_node[a] == road_node[b] ? 0.0 : d / team_.v_g;
    }
  }
}

Point Mission::node_point(int node) const {
  if (node == kDepotNode) return scenario_.depot_point();
  return scenario_.tasks.at(static_cast<std::size_t>(task_of_node(node))).pos();
}

double Mission::road_time(int a, int b) const {
  require(a >= 0 && b >= 0 && a < num_nodes_ && b < num_nodes_ && is_ground(a) && is_ground(b),
          ErrorKind::contract_violation, "road travel is only defined between ground nodes");
  return road_time_[a * num_nodes_ + b];
}

int Mission::horizon() const {
  if (options_.horizon > 0) return options_.horizon;
  return 4 * (num_tasks() + team_.num_uavs);
}

MissionPtr make_mission(Scenario scenario, TeamConfig team, MissionOptions options) {
  return std::make_shared<const Mission>(std::move(scenario), team, options);
}

int MissionState::visited_count() const {
  return static_cast<int>(std::count(visited.begin(), visited.end(), std::uint8_t{1}));
}

bool MissionState::all_visited() const {
  return std::all_of(visited.begin(), visited.end(), [](std::uint8_t v) { return v != 0; });
}

double MissionState::max_clock() const {
  double m = 0.0;
  for (const auto& a : uavs) m = std::max(m, a.clock_s);
  for (const auto& a : ugvs) m = std::max(m, a.clock_s);
  return m;
}

bool MissionState::operator==(const MissionState& o) const {
  const bool same_mission =
      mission == o.mission ||
      (mission && o.mission && mission->scenario() == o.mission->scenario() &&
       mission->team() == o.mission->team());
  return same_mission && uavs == o.uavs && ugvs == o.ugvs && visited == o.visited &&
         phase == o.phase && active == o.active && assignments == o.assignments &&
         status == o.status && step_count == o.step_count &&
         recharge_events == o.recharge_events;
}

namespace {

bool airborne(const AgentState& u) { return !u.landed_at && u.sortie_visits > 0; }
bool idle(const AgentState& u) { return !u.landed_at && u.sortie_visits == 0; }

bool any_landed(const MissionState& s) {
  return std::any_of(s.uavs.begin(), s.uavs.end(), [](const AgentState& u) { return u.landed_at.has_value(); });
}

bool mission_complete(const MissionState& s) {
  if (!s.all_visited()) return false;
  return std::none_of(s.uavs.begin(), s.uavs.end(),
                      [](const AgentState& u) { return u.landed_at.has_value() || airborne(u); });
}

/// UAV indices the UGV may serve right now.
std::vector<int> pending_for(const MissionState& s, int ugv) {
  std::vector<int> out;
  const auto mode = s.mission->options().selection;
  if (mode == SelectionMode::scripted) {
    for (const auto& u : s.uavs) {
      if (u.landed_at) out.push_back(u.index);
    }
    return out;
  }
  for (int u : s.assignments.at(ugv)) {
    if (s.uavs.at(u).landed_at) out.push_back(u);
  }
  return out;
}

bool uav_can_act(const MissionState& s, const AgentState& u) {
  if (u.landed_at) return false;
  if (airborne(u)) return true;
  return !u.retired && !s.all_visited();
}

int nearest_ugv(const MissionState& s, int landing_node) {
  const Mission& m = *s.mission;
  int best = -1;
  double best_t = std::numeric_limits<double>::infinity();
  for (const auto& g : s.ugvs) {
    if (g.retired) continue;
    const double t = m.road_time(g.node, landing_node);
    if (t < best_t) {
      best_t = t;
      best = g.index;
    }
  }
  if (best < 0) {
    // Every UGV retired: fall back to the lowest index so service still happens.
    best = 0;
  }
  return best;
}

void select_sortie_wise(MissionState& s) {
  if (s.active) {
    if (s.active->kind == AgentKind::uav && airborne(s.uavs[s.active->index])) return;
    if (s.active->kind == AgentKind::ugv && !pending_for(s, s.active->index).empty()) return;
  }
  s.active.reset();
  for (int round = 0; round < 2; ++round) {
    if (s.phase == Phase::uav_sorties) {
      const AgentState* pick = nullptr;
      if (!s.all_visited()) {
        for (const auto& u : s.uavs) {
          if (!idle(u) || u.retired) continue;
          if (!pick || u.clock_s < pick->clock_s) pick = &u;
        }
      }
      if (pick) {
        s.active = AgentRef{AgentKind::uav, pick->index};
        return;
      }
      if (!any_landed(s)) return;
      s.phase = Phase::ugv_sorties;
      s.assignments = assign_uavs_to_ugvs(s);
    }
    const AgentState* pick = nullptr;
    for (const auto& g : s.ugvs) {
      if (pending_for(s, g.index).empty()) continue;
      if (!pick || g.clock_s < pick->clock_s) pick = &g;
    }
    if (pick) {
      s.active = AgentRef{AgentKind::ugv, pick->index};
      return;
    }
    s.phase = Phase::uav_sorties;
  }
}

void select_per_step(MissionState& s) {
  s.active.reset();
  const int m = static_cast<int>(s.uavs.size());
  const int k = m + static_cast<int>(s.ugvs.size());
  for (int off = 0; off < k; ++off) {
    const int idx = (s.step_count + off) % k;
    const AgentRef ref = idx < m ? AgentRef{AgentKind::uav, idx} : AgentRef{AgentKind::ugv, idx - m};
    if (can_act(s, ref)) {
      s.active = ref;
      return;
    }
  }
}

}  // namespace

void refresh(MissionState& s) {
  if (mission_complete(s)) {
    s.status = Status::success;
    s.active.reset();
    return;
  }
  if (s.step_count > s.mission->horizon()) {
    s.status = Status::failure;
    s.active.reset();
    return;
  }
  const auto mode = s.mission->options().selection;
  if (mode == SelectionMode::scripted) {
    s.active.reset();
    bool anyone = false;
    for (const auto& u : s.uavs) anyone = anyone || can_act(s, {AgentKind::uav, u.index});
    for (const auto& g : s.ugvs) anyone = anyone || can_act(s, {AgentKind::ugv, g.index});
    if (!anyone) s.status = Status::failure;
    return;
  }
  select_active_agent(s);
  if (!s.active) {
    s.status = Status::failure;
    return;
  }
  if (s.active->kind == AgentKind::uav) {
    const auto mask = feasible_actions(s, *s.active);
    if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; })) {
      s.status = Status::failure;
      s.active.reset();
    }
  }
}

MissionState reset(MissionPtr mission) {
  require(mission != nullptr, ErrorKind::invalid_argument, "reset needs a mission");
  MissionState s;
  s.mission = mission;
  const auto& team = mission->team();
  const double capacity = mission->scenario().fuel.capacity_kj;
  for (int i = 0; i < team.num_uavs; ++i) {
    AgentState a;
    a.kind = AgentKind::uav;
    a.index = i;
    a.fuel_kj = capacity;
    s.uavs.push_back(a);
  }
  for (int i = 0; i < team.num_ugvs; ++i) {
    AgentState a;
    a.kind = AgentKind::ugv;
    a.index = i;
    a.fuel_kj = capacity;
    s.ugvs.push_back(a);
  }
  s.visited.assign(static_cast<std::size_t>(mission->num_tasks()), 0);
  s.assignments.assign(s.ugvs.size(), {});
  refresh(s);
  return s;
}

bool can_act(const MissionState& s, AgentRef agent) {
  if (s.status != Status::running) return false;
  if (agent.kind == AgentKind::uav) {
    if (agent.index < 0 || agent.index >= static_cast<int>(s.uavs.size())) return false;
    return uav_can_act(s, s.uavs[agent.index]);
  }
  if (agent.index < 0 || agent.index >= static_cast<int>(s.ugvs.size())) return false;
  return !pending_for(s, agent.index).empty();
}

ActionMask feasible_actions(const MissionState& state) {
  if (!state.active || state.status != Status::running) {
    return ActionMask(static_cast<std::size_t>(state.mission->num_actions()), 0);
  }
  return feasible_actions(state, *state.active);
}

ActionMask feasible_actions(const MissionState& s, AgentRef agent) {
  const Mission& m = *s.mission;
  const int n = m.num_nodes();
  ActionMask mask(static_cast<std::size_t>(m.num_actions()), 0);
  if (s.status != Status::running || !can_act(s, agent)) return mask;
  const double tol = m.options().fuel_tolerance_kj;

  if (agent.kind == AgentKind::ugv) {
    for (int u : pending_for(s, agent.index)) mask[n + s.uavs[u].landed_at->node] = 1;
    return mask;
  }

  const AgentState& u = s.uavs[agent.index];
  const int pos = u.node;
  const double fuel = u.fuel_kj;
  const auto& ground = m.ground_nodes();
  for (int j = 1; j < n; ++j) {
    if (s.visited[task_of_node(j)]) continue;
    const double out = m.flight_fuel(pos, j);
    if (out > fuel + tol) continue;
    for (int g : ground) {
      if (out + m.flight_fuel(j, g) <= fuel + tol) {
        mask[j] = 1;
        break;
      }
    }
  }
  for (int g : ground) {
    if (g == pos && u.sortie_visits == 0) continue;
    if (m.flight_fuel(pos, g) <= fuel + tol) mask[n + g] = 1;
  }
  return mask;
}

std::vector<std::vector<int>> assign_uavs_to_ugvs(const MissionState& s) {
  std::vector<int> landed;
  for (const auto& u : s.uavs) {
    if (u.landed_at) landed.push_back(u.index);
  }
  std::stable_sort(landed.begin(), landed.end(), [&](int a, int b) {
    return s.uavs[a].landed_at->time_s < s.uavs[b].landed_at->time_s;
  });
  std::vector<std::vector<int>> out(s.ugvs.size());
  for (int u : landed) out[nearest_ugv(s, s.uavs[u].landed_at->node)].push_back(u);
  return out;
}

void select_active_agent(MissionState& s) {
  switch (s.mission->options().selection) {
    case SelectionMode::sortie_wise: select_sortie_wise(s); break;
    case SelectionMode::per_step: select_per_step(s); break;
    case SelectionMode::scripted: break;
  }
}

void set_active(MissionState& s, AgentRef agent) {
  require(s.status == Status::running, ErrorKind::contract_violation, "mission is not running");
  require(can_act(s, agent), ErrorKind::contract_violation, to_string(agent) + " cannot act now");
  s.active = agent;
}

StepResult apply(MissionState& s, Action action) {
  require(s.status == Status::running, ErrorKind::contract_violation, "step on a terminal state");
  require(s.active.has_value(), ErrorKind::contract_violation, "no active agent");
  const Mission& m = *s.mission;
  require(action.node >= 0 && action.node < m.num_nodes(), ErrorKind::contract_violation,
          "action node out of range");
  const auto mask = feasible_actions(s, *s.active);
  require(mask[m.action_index(action)] != 0, ErrorKind::contract_violation,
          to_string(action) + " is masked for " + to_string(*s.active));

  StepResult result;
  const AgentRef who = *s.active;
  if (who.kind == AgentKind::uav) {
    AgentState& u = s.uavs[who.index];
    const double t = m.flight_time(u.node, action.node);
    u.fuel_kj = std::max(0.0, u.fuel_kj - m.flight_fuel(u.node, action.node));
    u.clock_s += t;
    u.node = action.node;
    result.reward_s = t;
    if (action.kind == ActionKind::visit) {
      s.visited[task_of_node(action.node)] = 1;
      ++u.sortie_visits;
    } else {
      u.landed_at = Landing{action.node, u.clock_s};
      if (m.options().selection == SelectionMode::per_step) {
        s.assignments[nearest_ugv(s, action.node)].push_back(u.index);
      }
    }
  } else {
    AgentState& g = s.ugvs[who.index];
    int served = -1;
    for (int u : pending_for(s, who.index)) {
      const auto& land = *s.uavs[u].landed_at;
      if (land.node != action.node) continue;
      if (served < 0 || land.time_s < s.uavs[served].landed_at->time_s) served = u;
    }
    AgentState& u = s.uavs[served];
    const double leg = m.road_time(g.node, action.node);
    const double arrival = g.clock_s + leg;
    const double start = std::max({u.landed_at->time_s, arrival, g.busy_until_s});
    const double done = start + m.team().recharge_time_s;
    g.node = action.node;
    g.clock_s = done;
    g.busy_until_s = done;
    u.clock_s = done;
    u.fuel_kj = m.scenario().fuel.capacity_kj;
    u.landed_at.reset();
    u.sortie_visits = 0;
    for (auto& queue : s.assignments) std::erase(queue, served);
    ++s.recharge_events;
    result.reward_s = leg + m.team().recharge_time_s;
  }
  ++s.step_count;
  refresh(s);
  result.status = s.status;
  return result;
}

StepOutcome step(const MissionState& state, Action action) {
  StepOutcome out;
  out.next_state = state;
  const auto r = apply(out.next_state, action);
  out.reward_s = r.reward_s;
  out.terminal = r.status != Status::running;
  return out;
}

Status is_terminal(const MissionState& state) { return state.status; }

double compute_return(const MissionState& state) {
  require(state.status != Status::running, ErrorKind::contract_violation,
          "return is only defined for terminal states");
  return state.max_clock() + (state.status == Status::failure ? state.mission->options().penalty_s : 0.0);
}

}  // namespace coroute
