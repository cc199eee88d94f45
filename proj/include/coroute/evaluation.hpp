#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coroute/evrptw.hpp"
#include "coroute/policy.hpp"
#include "coroute/trace.hpp"

namespace coroute {

enum class MethodKind { gls, tabu, anneal, drl_greedy, drl_sample, drl_mf_greedy, drl_mf_sample, oracle };

std::string to_string(MethodKind k);

/// A solver entry in a comparison. The drl_mf_* kinds decode with one agent
/// per decision step (agent t % |A|) instead of whole sorties.
struct MethodSpec {
  std::string name;
  MethodKind kind = MethodKind::gls;
  int samples = 1;  ///< sample-N pool size
  std::shared_ptr<const PolicyParams> policy;
  std::string checkpoint;  ///< where `policy` came from; informational
  SearchBudget budget;
  std::uint64_t seed = 0;

  bool uses_policy() const;
  bool is_heuristic() const;
  SelectionMode selection() const;
  void validate() const;
};

/// "gls", "tabu", "anneal", "oracle", "drl_greedy", "drl_sample64",
/// "drl_mf_greedy", "drl_mf_sample16". The name defaults to the text.
MethodSpec parse_method(const std::string& text);

/// Runs one method on one instance and returns its raw trace (not yet
/// validated). `instance_seed` is mixed with the method's own seed.
RouteSolution run_method(const MethodSpec& method, const Scenario& scenario, const TeamConfig& team,
                         std::uint64_t instance_seed, const MissionOptions& options = {});

struct CellResult {
  double objective_s = 0.0;  ///< from the replay, penalty included
  double wall_s = 0.0;
  bool failed = false;
  std::string error;
};

/// Score of a trace after replaying it against the scenario. Illegal traces
/// score penalty + reported makespan and are marked failed.
CellResult score_route(const Scenario& scenario, const RouteSolution& route, const MissionOptions& options = {});

struct MethodSummary {
  std::string name;
  double mean_min = 0.0;
  double std_min = 0.0;  ///< sample standard deviation
  double best_min = 0.0;
  double gap_pct = 0.0;  ///< against the lowest mean of the report
  double mean_time_s = 0.0;
  double win_rate_pct = 0.0;
  int failures = 0;
};

struct EvalReport {
  std::string label;  ///< team configuration, e.g. "1U1G"
  TeamConfig team;
  std::vector<std::string> methods;
  std::vector<std::string> instances;
  /// [method][instance]
  std::vector<std::vector<CellResult>> cells;
  std::vector<MethodSummary> summary;

  std::vector<std::vector<double>> objective_matrix() const;
};

struct EvalOptions {
  std::string label;  ///< empty = derived from the team
  bool timing = true;
  MissionOptions mission;
  std::uint64_t seed = 0;
};

/// Every (method, instance) cell runs independently, in parallel, and is
/// scored from its replay; a crash marks the cell failed with the penalty
/// as objective. Summaries come from the same objective matrix.
EvalReport evaluate_suite(const std::vector<MethodSpec>& methods, const std::vector<Scenario>& instances,
                          const TeamConfig& team, const EvalOptions& options = {});

/// Percentage of instances on which each method attains the lowest
/// objective; every method within `tie_s` of the minimum is credited.
std::vector<double> win_rate(const std::vector<std::vector<double>>& objectives, double tie_s = 1e-6);

/// Rebuilds the summaries from the cells.
void summarize(EvalReport& report);

std::string team_label(const TeamConfig& team);

/// method,obj_mean_min,obj_std_min,obj_best_min,gap_pct,time_s,win_rate_pct,failures
std::string report_csv(const EvalReport& report);
/// Summary plus the per-instance objective matrix.
std::string report_json(const EvalReport& report);
/// Rows = methods, one Obj./Gap/Time/Win column group per report.
std::string comparison_table_csv(const std::vector<EvalReport>& reports);
/// Human-readable version of the same table.
std::string comparison_table_text(const std::vector<EvalReport>& reports);

}  // namespace coroute
