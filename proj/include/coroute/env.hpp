#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coroute/scenario.hpp"

namespace coroute {

enum class AgentKind { uav, ugv };
enum class ActionKind { visit, recharge };
enum class Phase { uav_sorties, ugv_sorties };
enum class Status { running, success, failure };

/// How the next acting agent is chosen.
///   sortie_wise: each UAV flies a whole sortie (smallest clock first), then
///                each UGV serves its assigned UAVs, and so on.
///   per_step:    agents take turns in a fixed cycle, one decision each.
///   scripted:    the caller names the agent before every step (replay).
enum class SelectionMode { sortie_wise, per_step, scripted };

std::string to_string(SelectionMode m);
SelectionMode parse_selection(const std::string& name);

/// Node indices: 0 is the depot, task `id` lives at node `id + 1`.
constexpr int kDepotNode = 0;
constexpr int node_of_task(int task_id) { return task_id + 1; }
constexpr int task_of_node(int node) { return node - 1; }

struct AgentRef {
  AgentKind kind = AgentKind::uav;
  int index = 0;
  bool operator==(const AgentRef&) const = default;
};

std::string to_string(AgentRef a);
AgentRef parse_agent(const std::string& name);

struct Action {
  ActionKind kind = ActionKind::visit;
  int node = 0;
  bool operator==(const Action&) const = default;

  static Action visit(int node) { return {ActionKind::visit, node}; }
  static Action recharge(int node) { return {ActionKind::recharge, node}; }
};

std::string to_string(Action a);

struct Landing {
  int node = 0;
  double time_s = 0.0;
  bool operator==(const Landing&) const = default;
};

struct AgentState {
  AgentKind kind = AgentKind::uav;
  int index = 0;
  int node = kDepotNode;
  double fuel_kj = 0.0;
  double clock_s = 0.0;
  std::optional<Landing> landed_at;
  double busy_until_s = 0.0;
  int sortie_visits = 0;  ///< visits since the last recharge
  bool retired = false;

  bool operator==(const AgentState&) const = default;
};

struct MissionOptions {
  SelectionMode selection = SelectionMode::sortie_wise;
  /// Decision-step cap; 0 selects 4 x (tasks + UAVs).
  int horizon = 0;
  double penalty_s = 800.0 * 60.0;
  double fuel_tolerance_kj = 1e-6;
};

/// Immutable per-instance context: the scenario plus precomputed flight and
/// road matrices over the node set (depot + tasks).
class Mission {
 public:
  Mission(Scenario scenario, TeamConfig team, MissionOptions options = {});

  const Scenario& scenario() const { return scenario_; }
  const TeamConfig& team() const { return team_; }
  const MissionOptions& options() const { return options_; }

  int num_nodes() const { return num_nodes_; }
  int num_tasks() const { return num_nodes_ - 1; }
  int num_actions() const { return 2 * num_nodes_; }
  Point node_point(int node) const;
  bool is_ground(int node) const { return ground_flag_[node] != 0; }
  const std::vector<int>& ground_nodes() const { return ground_nodes_; }

  double flight_time(int a, int b) const { return flight_time_[a * num_nodes_ + b]; }
  double flight_fuel(int a, int b) const { return flight_fuel_[a * num_nodes_ + b]; }
  /// Road travel time at v_g between two ground nodes.
  double road_time(int a, int b) const;
  int horizon() const;

  int action_index(Action a) const {
    return a.kind == ActionKind::visit ? a.node : num_nodes_ + a.node;
  }
  Action action_at(int index) const {
    return index < num_nodes_ ? Action::visit(index) : Action::recharge(index - num_nodes_);
  }

 private:
  Scenario scenario_;
  TeamConfig team_;
  MissionOptions options_;
  int num_nodes_ = 0;
  std::vector<std::uint8_t> ground_flag_;
  std::vector<int> ground_nodes_;
  std::vector<double> flight_time_;
  std::vector<double> flight_fuel_;
  std::vector<double> road_time_;
};

using MissionPtr = std::shared_ptr<const Mission>;
MissionPtr make_mission(Scenario scenario, TeamConfig team, MissionOptions options = {});

struct MissionState {
  MissionPtr mission;
  std::vector<AgentState> uavs;
  std::vector<AgentState> ugvs;
  std::vector<std::uint8_t> visited;  ///< per task id
  Phase phase = Phase::uav_sorties;
  std::optional<AgentRef> active;
  std::vector<std::vector<int>> assignments;  ///< per UGV, queued UAV indices
  Status status = Status::running;
  int step_count = 0;
  int recharge_events = 0;

  const AgentState& agent(AgentRef a) const {
    return a.kind == AgentKind::uav ? uavs.at(a.index) : ugvs.at(a.index);
  }
  AgentState& agent(AgentRef a) {
    return a.kind == AgentKind::uav ? uavs.at(a.index) : ugvs.at(a.index);
  }
  int visited_count() const;
  bool all_visited() const;
  double max_clock() const;

  bool operator==(const MissionState& o) const;
};

using ActionMask = std::vector<std::uint8_t>;

struct StepOutcome {
  double reward_s = 0.0;
  MissionState next_state;
  bool terminal = false;
};

struct StepResult {
  double reward_s = 0.0;
  Status status = Status::running;
};

MissionState reset(MissionPtr mission);

/// Mask over Mission::num_actions() entries for the active agent; all false
/// when there is no active agent.
ActionMask feasible_actions(const MissionState& state);
ActionMask feasible_actions(const MissionState& state, AgentRef agent);

/// Applies `action` for the active agent in place, then selects the next
/// agent and updates the terminal status. Masked actions throw
/// contract_violation.
StepResult apply(MissionState& state, Action action);
StepOutcome step(const MissionState& state, Action action);

/// Chooses the next active agent according to the mission's selection mode,
/// flipping phases and recomputing UAV-to-UGV assignments as needed.
void select_active_agent(MissionState& state);

/// Scripted mode: name the next agent. Throws contract_violation if that
/// agent has nothing it may do.
void set_active(MissionState& state, AgentRef agent);
bool can_act(const MissionState& state, AgentRef agent);

/// Re-evaluates the terminal status and (outside scripted mode) the active
/// agent. Called by apply; exposed for callers that edit a state directly.
void refresh(MissionState& state);

/// Greedy proximity assignment of every landed UAV (landing-time order) to
/// the road-nearest non-retired UGV; ties go to the lower UGV index.
std::vector<std::vector<int>> assign_uavs_to_ugvs(const MissionState& state);

Status is_terminal(const MissionState& state);

/// Max agent clock plus the failure penalty. Throws contract_violation on a
/// running state.
double compute_return(const MissionState& state);

}  // namespace coroute
