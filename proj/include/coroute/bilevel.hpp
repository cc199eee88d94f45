#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coroute/evrptw.hpp"
#include "coroute/msc.hpp"
#include "coroute/trace.hpp"

namespace coroute {

struct Subproblem {
  int index = 0;
  int source_stop = 0;  ///< mission node
  int dest_stop = 0;
  std::vector<int> tasks;  ///< task ids
  /// Earliest UGV arrival at the destination when the UGV drives the stop
  /// sequence without waiting.
  double t_r_s = 0.0;
  bool operator==(const Subproblem&) const = default;
};

/// One subproblem per stop of an ordered plan (depot first): the first is a
/// loop at the depot, subproblem k flies from stop k-1 to stop k and owns
/// the tasks allocated to stop k.
std::vector<Subproblem> split_subproblems(const Mission& mission, const RefuelPlan& ordered);

/// Inserts ground points between consecutive stops that are further apart
/// than one full tank, so every UAV can follow the UGV stop to stop.
std::vector<int> insert_relay_stops(const Mission& mission, const std::vector<int>& ordered_stops);

struct Rendezvous {
  int uav = 0;
  int ugv = 0;
  int node = 0;
  double landing_s = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct UgvWaypoint {
  int node = 0;
  double arrive_s = 0.0;
  double depart_s = 0.0;
};

struct SubproblemReport {
  Subproblem sub;
  EvrptwModel model;
  SearchResult result;
  std::uint64_t seed = 0;
  std::vector<Violation> violations;
};

struct HeuristicSolution {
  RefuelPlan plan;  ///< stops in visiting order, relays included
  std::vector<SubproblemReport> subproblems;
  std::vector<std::vector<UgvWaypoint>> ugv_routes;
  std::vector<Rendezvous> rendezvous;
  double makespan_s = 0.0;
};

struct BilevelResult {
  HeuristicSolution heuristic;
  RouteSolution route;
};

/// Refuel stops by set cover, UGV order by TSP, then one E-VRPTW per
/// subproblem, stitched into a mission trace with FIFO recharge queues.
BilevelResult solve_bilevel(const Scenario& scenario, const TeamConfig& team, SearchMethod method,
                            SearchBudget budget, std::uint64_t seed, const SearchParams& params = {});

std::string solver_report_json(const HeuristicSolution& sol, SearchMethod method, SearchBudget budget,
                               std::uint64_t seed);

}  // namespace coroute
