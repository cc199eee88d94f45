#pragma once

#include <vector>

namespace coroute {

class Mission;

/// Held-Karp is used up to this many stops (start excluded).
constexpr int kTspExactLimit = 15;

/// Orders the indices of a square cost matrix into a route starting at 0.
/// `closed` adds the leg back to 0 to the objective.
std::vector<int> solve_tsp(const std::vector<std::vector<double>>& cost, bool closed);
std::vector<int> solve_tsp_held_karp(const std::vector<std::vector<double>>& cost, bool closed);
std::vector<int> solve_tsp_two_opt(const std::vector<std::vector<double>>& cost, bool closed);
double route_cost(const std::vector<std::vector<double>>& cost, const std::vector<int>& order,
                  bool closed);

/// UGV visiting order over ground nodes, depot first, by road travel time.
/// The UGV never has to come back, so the route is left open.
std::vector<int> solve_tsp_stops(const Mission& mission, const std::vector<int>& stops);

}  // namespace coroute
