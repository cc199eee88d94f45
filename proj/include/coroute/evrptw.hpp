#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coroute {

class Mission;

/// Routing graph for one subproblem. Vertex 0 is the source stop S,
/// vertices 1..m are the subproblem's tasks and the remaining vertices are
/// copies of the destination stop, one per possible recharge event.
struct EvrptwModel {
  int num_tasks = 0;
  int num_copies = 0;
  int fleet = 1;
  double capacity_kj = 0.0;
  double recharge_time_s = 0.0;
  double big_fuel_kj = 0.0;  ///< L1
  double big_time_s = 0.0;   ///< L2
  double window_s = 0.0;     ///< earliest landing time at every copy
  std::vector<double> start_s;  ///< per UAV departure time from S
  std::vector<double> arc_time;  ///< |V| x |V|, row-major
  std::vector<double> arc_fuel;
  /// Mission node of every vertex (source, tasks, then the copies).
  std::vector<int> node;

  int num_vertices() const { return 1 + num_tasks + num_copies; }
  bool is_source(int v) const { return v == 0; }
  bool is_task(int v) const { return v >= 1 && v <= num_tasks; }
  bool is_copy(int v) const { return v > num_tasks && v < num_vertices(); }
  int first_copy() const { return num_tasks + 1; }
  double time(int a, int b) const { return arc_time[a * num_vertices() + b]; }
  double fuel(int a, int b) const { return arc_fuel[a * num_vertices() + b]; }
};

/// Builds the model over mission nodes. `copies` = 0 picks fleet + tasks,
/// enough for every task to sit in its own sortie.
EvrptwModel build_evrptw_model(const Mission& mission, int source_node, int dest_node,
                               const std::vector<int>& task_nodes, int fleet,
                               const std::vector<double>& start_s, double window_s, int copies = 0);

struct EvrptwSolution {
  /// Per UAV: S, ..., final copy.
  std::vector<std::vector<int>> routes;
  std::vector<std::vector<double>> arrival_s;
  /// Fuel on arrival at tasks; capacity at S and at copies (after recharge).
  std::vector<std::vector<double>> fuel_kj;
  double objective_s = 0.0;
  bool operator==(const EvrptwSolution&) const = default;
};

/// Total travel time over all routes.
double evrptw_objective(const EvrptwModel& model, const std::vector<std::vector<int>>& routes);

/// Fills arrival times and fuel levels along given routes: waiting happens
/// at copies until the window opens, and the recharge time is spent there
/// before the UAV leaves again.
EvrptwSolution schedule_routes(const EvrptwModel& model, std::vector<std::vector<int>> routes);

/// Constraint identifiers reported by the validator.
enum class Constraint {
  visit_once,         ///< every task entered exactly once
  full_at_stop,       ///< fuel equals capacity at every stop copy
  fuel_bounds,        ///< 0 <= fuel <= capacity at tasks
  fuel_decrease,      ///< fuel drops by at least the arc cost
  time_window,        ///< copies are reached no earlier than the window
  time_propagation,   ///< arrival times respect arc times and recharge service
  flow_conservation,  ///< every entered vertex is left (except the final copy)
  route_start,        ///< one route per UAV, leaving S
  route_end,          ///< every route ends at a stop copy
  arc_fuel,           ///< no arc costs more fuel than is on board
};

std::string to_string(Constraint c);

struct Violation {
  Constraint constraint = Constraint::visit_once;
  int vertex = -1;
  std::string detail;
};

/// Empty when every constraint instance holds within `tolerance`.
std::vector<Violation> validate_evrptw(const EvrptwModel& model, const EvrptwSolution& solution,
                                       double tolerance = 1e-6);

enum class SearchMethod { gls, tabu, anneal };
std::string to_string(SearchMethod m);
SearchMethod parse_search_method(const std::string& name);

struct SearchBudget {
  int iterations = 2000;
  int wall_ms = 0;  ///< 0 = no wall-clock limit (keeps runs reproducible)
};

struct SearchParams {
  double gls_lambda_factor = 0.1;  ///< lambda = factor x mean arc time
  double anneal_t0_factor = 0.2;   ///< T0 = factor x construction objective
  double anneal_ratio = 0.995;
  int tabu_tenure = 0;             ///< 0 = ceil(|V| / 2)
};

struct SearchResult {
  EvrptwSolution solution;
  double construction_objective_s = 0.0;
  int iterations = 0;
  /// Best objective after each iteration.
  std::vector<double> best_history;
};

/// Nearest-neighbour construction, improved by the chosen metaheuristic.
/// Throws infeasible naming the task when some task cannot be served.
SearchResult solve_evrptw(const EvrptwModel& model, SearchMethod method, SearchBudget budget,
                          std::uint64_t seed, const SearchParams& params = {});

/// The construction seed on its own.
EvrptwSolution construct_evrptw(const EvrptwModel& model);

}  // namespace coroute
