#include "coroute/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "coroute/bilevel.hpp"
#include "coroute/error.hpp"
#include "coroute/oracle.hpp"
#include "coroute/rng.hpp"
#include "coroute/rollout.hpp"
#include "json_codec.hpp"

namespace coroute {

std::string to_string(MethodKind k) {
  switch (k) {
    case MethodKind::gls: return "gls";
    case MethodKind::tabu: return "tabu";
    case MethodKind::anneal: return "anneal";
    case MethodKind::drl_greedy: return "drl_greedy";
    case MethodKind::drl_sample: return "drl_sample";
    case MethodKind::drl_mf_greedy: return "drl_mf_greedy";
    case MethodKind::drl_mf_sample: return "drl_mf_sample";
    case MethodKind::oracle: return "oracle";
  }
  return "?";
}

bool MethodSpec::uses_policy() const {
  return kind == MethodKind::drl_greedy || kind == MethodKind::drl_sample || kind == MethodKind::drl_mf_greedy ||
         kind == MethodKind::drl_mf_sample;
}

bool MethodSpec::is_heuristic() const {
  return kind == MethodKind::gls || kind == MethodKind::tabu || kind == MethodKind::anneal;
}

SelectionMode MethodSpec::selection() const {
  return kind == MethodKind::drl_mf_greedy || kind == MethodKind::drl_mf_sample ? SelectionMode::per_step
                                                                                : SelectionMode::sortie_wise;
}

void MethodSpec::validate() const {
  require(samples >= 1, ErrorKind::invalid_argument, "method " + name + ": sample count must be at least 1");
  if (uses_policy()) {
    require(policy != nullptr, ErrorKind::invalid_argument, "method " + name + " needs policy weights");
  }
  if (is_heuristic()) {
    require(budget.iterations >= 0, ErrorKind::invalid_argument, "method " + name + ": negative budget");
  }
}

MethodSpec parse_method(const std::string& text) {
  MethodSpec m;
  m.name = text;
  auto sample_count = [&](const std::string& prefix) {
    const std::string digits = text.substr(prefix.size());
    require(!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }),
            ErrorKind::invalid_argument, "bad sample count in method '" + text + "'");
    require(digits.size() <= 7, ErrorKind::invalid_argument, "sample count too large in '" + text + "'");
    return std::stoi(digits);
  };
  if (text == "gls" || text == "tabu" || text == "anneal") {
    m.kind = text == "gls" ? MethodKind::gls : text == "tabu" ? MethodKind::tabu : MethodKind::anneal;
  } else if (text == "oracle") {
    m.kind = MethodKind::oracle;
  } else if (text == "drl_greedy") {
    m.kind = MethodKind::drl_greedy;
  } else if (text == "drl_mf_greedy") {
    m.kind = MethodKind::drl_mf_greedy;
  } else if (text.rfind("drl_mf_sample", 0) == 0) {
    m.kind = MethodKind::drl_mf_sample;
    m.samples = sample_count("drl_mf_sample");
  } else if (text.rfind("drl_sample", 0) == 0) {
    m.kind = MethodKind::drl_sample;
    m.samples = sample_count("drl_sample");
  } else {
    fail(ErrorKind::invalid_argument, "unknown method '" + text + "'");
  }
  require(m.samples >= 1, ErrorKind::invalid_argument, "sample count must be at least 1");
  return m;
}

RouteSolution run_method(const MethodSpec& method, const Scenario& scenario, const TeamConfig& team,
                         std::uint64_t instance_seed, const MissionOptions& options) {
  method.validate();
  const std::uint64_t seed = Rng::mix(method.seed, instance_seed);
  switch (method.kind) {
    case MethodKind::gls:
    case MethodKind::tabu:
    case MethodKind::anneal: {
      const SearchMethod sm = method.kind == MethodKind::gls    ? SearchMethod::gls
                              : method.kind == MethodKind::tabu ? SearchMethod::tabu
                                                                : SearchMethod::anneal;
      return solve_bilevel(scenario, team, sm, method.budget, seed).route;
    }
    case MethodKind::oracle: return brute_force_oracle(scenario, team, {}, options).route;
    default: break;
  }
  MissionOptions opts = options;
  opts.selection = method.selection();
  const bool sample = method.kind == MethodKind::drl_sample || method.kind == MethodKind::drl_mf_sample;
  const DecodePolicy decode = sample ? DecodePolicy::sample(method.samples, seed) : DecodePolicy::greedy();
  return rollout(scenario, team, *method.policy, decode, opts).best_route();
}

CellResult score_route(const Scenario& scenario, const RouteSolution& route, const MissionOptions& options) {
  CellResult cell;
  const ReplayReport rep = replay(scenario, route, route.selection);
  if (!rep.legal) {
    cell.failed = true;
    cell.objective_s = options.penalty_s + std::max(0.0, route.makespan_s);
    cell.error = "illegal trace: " + (rep.violations.empty() ? std::string("?") : rep.violations.front());
    return cell;
  }
  cell.objective_s = rep.return_s;
  if (rep.status != Status::success) {
    cell.failed = true;
    cell.error = "mission failed (" + std::to_string(rep.visited) + "/" + std::to_string(rep.num_tasks) + " tasks)";
  }
  return cell;
}

std::vector<std::vector<double>> EvalReport::objective_matrix() const {
  std::vector<std::vector<double>> out(cells.size());
  for (std::size_t m = 0; m < cells.size(); ++m) {
    for (const auto& c : cells[m]) out[m].push_back(c.objective_s);
  }
  return out;
}

std::vector<double> win_rate(const std::vector<std::vector<double>>& obj, double tie_s) {
  std::vector<double> out(obj.size(), 0.0);
  if (obj.empty()) return out;
  const std::size_t n = obj[0].size();
  for (const auto& row : obj) {
    require(row.size() == n, ErrorKind::contract_violation, "objective matrix is ragged");
  }
  if (n == 0) return out;
  std::vector<int> wins(obj.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : obj) best = std::min(best, row[i]);
    for (std::size_t m = 0; m < obj.size(); ++m) {
      if (obj[m][i] <= best + tie_s) ++wins[m];
    }
  }
  for (std::size_t m = 0; m < obj.size(); ++m) out[m] = 100.0 * wins[m] / static_cast<double>(n);
  return out;
}

void summarize(EvalReport& r) {
  const auto obj = r.objective_matrix();
  const auto wins = win_rate(obj);
  r.summary.assign(r.methods.size(), {});
  double best_mean = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < r.methods.size(); ++m) {
    auto& s = r.summary[m];
    s.name = r.methods[m];
    const auto& row = obj[m];
    const double n = static_cast<double>(row.size());
    double sum = 0.0, time = 0.0;
    s.best_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < row.size(); ++i) {
      sum += row[i] / 60.0;
      s.best_min = std::min(s.best_min, row[i] / 60.0);
      time += r.cells[m][i].wall_s;
      if (r.cells[m][i].failed) ++s.failures;
    }
    s.mean_min = row.empty() ? 0.0 : sum / n;
    if (row.empty()) s.best_min = 0.0;
    double ss = 0.0;
    for (double v : row) ss += (v / 60.0 - s.mean_min) * (v / 60.0 - s.mean_min);
    s.std_min = row.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    s.mean_time_s = row.empty() ? 0.0 : time / n;
    s.win_rate_pct = wins[m];
    best_mean = std::min(best_mean, s.mean_min);
  }
  for (auto& s : r.summary) s.gap_pct = best_mean > 0 ? 100.0 * (s.mean_min - best_mean) / best_mean : 0.0;
}

std::string team_label(const TeamConfig& team) {
  return std::to_string(team.num_uavs) + "U" + std::to_string(team.num_ugvs) + "G";
}

EvalReport evaluate_suite(const std::vector<MethodSpec>& methods, const std::vector<Scenario>& instances,
                          const TeamConfig& team, const EvalOptions& options) {
  require(!methods.empty(), ErrorKind::invalid_argument, "no methods to evaluate");
  for (const auto& m : methods) m.validate();
  team.validate();
  EvalReport r;
  r.label = options.label.empty() ? team_label(team) : options.label;
  r.team = team;
  for (const auto& m : methods) r.methods.push_back(m.name);
  for (std::size_t i = 0; i < instances.size(); ++i) r.instances.push_back("i" + std::to_string(i));
  r.cells.assign(methods.size(), std::vector<CellResult>(instances.size()));

  const long long total = static_cast<long long>(methods.size() * instances.size());
#pragma omp parallel for schedule(dynamic)
  for (long long k = 0; k < total; ++k) {
    const std::size_t m = static_cast<std::size_t>(k) / instances.size();
    const std::size_t i = static_cast<std::size_t>(k) % instances.size();
    const auto t0 = std::chrono::steady_clock::now();
    CellResult cell;
    try {
      const RouteSolution route =
          run_method(methods[m], instances[i], team, Rng::mix(options.seed, i), options.mission);
      cell = score_route(instances[i], route, options.mission);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.objective_s = options.mission.penalty_s;
      cell.error = e.what();
    }
    if (options.timing) {
      cell.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    r.cells[m][i] = std::move(cell);
  }
  summarize(r);
  return r;
}

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv(const EvalReport& r) {
  std::string out = "method,obj_mean_min,obj_std_min,obj_best_min,gap_pct,time_s,win_rate_pct,failures\n";
  for (const auto& s : r.summary) {
    out += csv_field(s.name) + "," + fmt(s.mean_min) + "," + fmt(s.std_min) + "," + fmt(s.best_min) + "," +
           fmt(s.gap_pct, 2) + "," + fmt(s.mean_time_s, 3) + "," + fmt(s.win_rate_pct, 1) + "," +
           std::to_string(s.failures) + "\n";
  }
  return out;
}

std::string report_json(const EvalReport& r) {
  nlohmann::json j;
  j["version"] = 1;
  j["label"] = r.label;
  j["team"] = codec::to_json(r.team);
  j["instances"] = r.instances;
  auto methods = nlohmann::json::array();
  for (std::size_t m = 0; m < r.methods.size(); ++m) {
    const auto& s = r.summary[m];
    nlohmann::json row;
    row["name"] = s.name;
    row["obj_mean_min"] = s.mean_min;
    row["obj_std_min"] = s.std_min;
    row["obj_best_min"] = s.best_min;
    row["gap_pct"] = s.gap_pct;
    row["time_s"] = s.mean_time_s;
    row["win_rate_pct"] = s.win_rate_pct;
    row["failures"] = s.failures;
    auto objectives = nlohmann::json::array();
    auto errors = nlohmann::json::object();
    for (std::size_t i = 0; i < r.cells[m].size(); ++i) {
      objectives.push_back(r.cells[m][i].objective_s);
      if (!r.cells[m][i].error.empty()) errors[r.instances[i]] = r.cells[m][i].error;
    }
    row["objective_s"] = objectives;
    if (!errors.empty()) row["errors"] = errors;
    methods.push_back(row);
  }
  j["methods"] = methods;
  return j.dump(2) + "\n";
}

namespace {

std::vector<std::string> method_union(const std::vector<EvalReport>& reports) {
  std::vector<std::string> names;
  for (const auto& r : reports) {
    for (const auto& n : r.methods) {
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
  }
  return names;
}

const MethodSummary* find_summary(const EvalReport& r, const std::string& name) {
  for (const auto& s : r.summary) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

}  // namespace

std::string comparison_table_csv(const std::vector<EvalReport>& reports) {
  std::string out = "method";
  for (const auto& r : reports) {
    for (const char* col : {"obj_min", "gap_pct", "time_s", "win_rate_pct"}) out += "," + csv_field(r.label + ":" + col);
  }
  out += "\n";
  for (const auto& name : method_union(reports)) {
    out += csv_field(name);
    for (const auto& r : reports) {
      const auto* s = find_summary(r, name);
      if (!s) {
        out += ",,,,";
        continue;
      }
      out += "," + fmt(s->mean_min, 1) + " +- " + fmt(s->std_min, 1) + "," + fmt(s->gap_pct, 1) + "," +
             fmt(s->mean_time_s, 2) + "," + fmt(s->win_rate_pct, 1);
    }
    out += "\n";
  }
  return out;
}

std::string comparison_table_text(const std::vector<EvalReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"Method"};
  for (const auto& r : reports) {
    for (const char* col : {"Obj. (min.)", "Gap (%)", "Time (sec)", "Win (%)"}) head.push_back(r.label + " " + col);
  }
  rows.push_back(head);
  for (const auto& name : method_union(reports)) {
    std::vector<std::string> row{name};
    for (const auto& r : reports) {
      const auto* s = find_summary(r, name);
      if (!s) {
        row.insert(row.end(), {"-", "-", "-", "-"});
        continue;
      }
      row.push_back(fmt(s->mean_min, 1) + " +- " + fmt(s->std_min, 1) + " (" + fmt(s->best_min, 1) + ")");
      row.push_back(fmt(s->gap_pct, 1));
      row.push_back(fmt(s->mean_time_s, 2));
      row.push_back(fmt(s->win_rate_pct, 1));
    }
    rows.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t c = 0; c < rows[k].size(); ++c) {
      os << (c ? "  " : "") << rows[k][c];
      if (c + 1 < rows[k].size()) os << std::string(width[c] - rows[k][c].size(), ' ');
    }
    os << "\n";
    if (k == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << "\n";
    }
  }
  return os.str();
}

}  // namespace coroute
