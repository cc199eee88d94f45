#pragma once

#include <cstdint>
#include <vector>

#include "coroute/evrptw.hpp"
#include "coroute/trace.hpp"

namespace coroute {

struct OracleLimits {
  int max_tasks = 6;
  int max_recharge_nodes = 3;  ///< depot plus ground task points
};

struct OracleResult {
  double makespan_s = 0.0;
  RouteSolution route;
  long long expanded = 0;  ///< search nodes visited
};

/// Exact minimum-makespan plan for a 1 UAV - 1 UGV mission, found by
/// depth-first search over every legal environment decision (task orders,
/// recharge insertions and recharge node choices) with makespan bounding
/// and dominance pruning. Throws size_limit beyond `limits` and infeasible
/// when no decision sequence covers every task.
OracleResult brute_force_oracle(const Scenario& scenario, const TeamConfig& team = {},
                                const OracleLimits& limits = {}, const MissionOptions& options = {});

struct EvrptwOracleResult {
  double objective_s = 0.0;
  /// Model vertices from S to the final copy; copies are numbered in use order.
  std::vector<int> route;
};

/// Exhaustive single-UAV E-VRPTW reference: every task order combined with
/// every subset of "recharge before this task" choices. Throws size_limit
/// for more than `max_tasks` tasks or a fleet other than 1, infeasible if
/// no combination is fuel feasible.
EvrptwOracleResult evrptw_brute_force(const EvrptwModel& model, int max_tasks = 8);

}  // namespace coroute
