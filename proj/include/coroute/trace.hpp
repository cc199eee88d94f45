#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coroute/env.hpp"
#include "coroute/events.hpp"

namespace coroute {

/// One executed decision; fuel and clock are the acting agent's values
/// after the step.
struct TraceStep {
  int t = 0;
  AgentRef agent;
  Action action;
  double reward_s = 0.0;
  double fuel_kj = 0.0;
  double clock_s = 0.0;
  bool operator==(const TraceStep&) const = default;
};

struct AppliedEvent {
  int before_step = 0;  ///< applied before steps[before_step]
  double switch_time_s = 0.0;
  ReplanEvent event;
  bool operator==(const AppliedEvent&) const = default;
};

/// A complete mission trajectory, the common output of every solver.
struct RouteSolution {
  TeamConfig team;
  SelectionMode selection = SelectionMode::sortie_wise;
  int horizon = 0;  ///< decision-step cap used when recording; 0 = default
  std::vector<TraceStep> steps;
  std::vector<AppliedEvent> events;
  Status status = Status::running;
  double return_s = 0.0;
  double makespan_s = 0.0;
  double log_prob = 0.0;

  bool operator==(const RouteSolution&) const = default;
};

/// Applies `action` for the state's active agent and returns the trace
/// record for it.
TraceStep record_step(MissionState& state, Action action);

/// Copies terminal status, return and makespan from `state` into `sol`.
void finalize(RouteSolution& sol, const MissionState& state);

struct ReplayReport {
  bool legal = false;
  std::vector<std::string> violations;
  Status status = Status::running;
  double return_s = 0.0;
  double makespan_s = 0.0;
  int visited = 0;
  int num_tasks = 0;
  MissionState final_state;
};

/// Re-executes a trace against a fresh environment built from `scenario`
/// and the trace's team, applying recorded events at their steps. In
/// scripted mode the trace names each agent; otherwise the selection mode
/// must pick the recorded agent. Recorded rewards, clocks and fuel must
/// match within `tolerance`.
ReplayReport replay(const Scenario& scenario, const RouteSolution& trace,
                    SelectionMode mode = SelectionMode::scripted, double tolerance = 1e-6);

/// JSON lines: a header record {"header":{team, selection, horizon, status,
/// return_s, makespan_s}}, event records {"event":..., "before_step":...},
/// then one record per step {t, agent, action, reward_s, fuel_kj, clock_s}.
std::string trace_to_jsonl(const RouteSolution& sol);
RouteSolution trace_from_jsonl(const std::string& text);
void save_trace(const RouteSolution& sol, const std::filesystem::path& path);
RouteSolution load_trace(const std::filesystem::path& path);

}  // namespace coroute
