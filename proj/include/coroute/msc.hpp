#pragma once

#include <map>
#include <vector>

#include "coroute/scenario.hpp"

namespace coroute {

/// Refuel stops over mission node indices (0 = depot, task `id` = node
/// `id + 1`). `cover` maps every task id to the stop it is allocated to.
struct RefuelPlan {
  std::vector<int> stops;
  std::map<int, int> cover;
  bool operator==(const RefuelPlan&) const = default;
};

/// Exact search is used up to this many candidate ground points.
constexpr int kMscExactLimit = 20;

/// Minimum set of ground points (depot included as a candidate) such that
/// every task lies within `coverage_radius_m` of a selected point. Stops in
/// `forced` are always selected and do not count toward the search. Each
/// task is allocated to its nearest selected stop. Stops come back sorted.
RefuelPlan solve_msc(const Scenario& scenario, double coverage_radius_m,
                     const std::vector<int>& forced = {});

/// Same cover problem solved greedily (largest new coverage first) and then
/// improved by removing redundant stops and replacing pairs with one stop.
RefuelPlan solve_msc_greedy(const Scenario& scenario, double coverage_radius_m,
                            const std::vector<int>& forced = {});

}  // namespace coroute
