// End-to-end acceptance run. Prints one PASS/FAIL line per criterion with
// the measured values and the pinned tolerance, then exits non-zero if any
// criterion failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "coroute/bilevel.hpp"
#include "coroute/checkpoint.hpp"
#include "coroute/cli.hpp"
#include "coroute/error.hpp"
#include "coroute/evaluation.hpp"
#include "coroute/kernels.hpp"
#include "coroute/oracle.hpp"
#include "coroute/replan.hpp"
#include "coroute/rng.hpp"
#include "coroute/rollout.hpp"
#include "coroute/scenario_io.hpp"
#include "coroute/training.hpp"

using namespace coroute;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- shared state for the learning criteria ---------------------------------

struct Trained {
  PolicyParams initial;
  TrainState sortie;
  TrainState per_step;
  std::vector<Scenario> held_out;
  TrainConfig config;
  bool per_step_done = false;
};

Trained& trained() {
  static Trained t = [] {
    Trained t;
    t.config = TrainConfig::desk();
    t.initial = init_policy(t.config.policy, 1);
    TrainHooks hooks;
    hooks.timing = false;
    t.sortie = train(t.config, t.initial, 1, hooks);
    for (int i = 0; i < 50; ++i) t.held_out.push_back(t.config.problem.generate(Rng::mix(0x4E1D, i)));
    return t;
  }();
  return t;
}

MethodSpec drl_method(const std::string& kind, const std::string& name, const PolicyParams& p, std::uint64_t seed = 7) {
  MethodSpec m = parse_method(kind);
  m.name = name;
  m.policy = std::make_shared<const PolicyParams>(p);
  m.seed = seed;
  return m;
}

// ---- criteria ---------------------------------------------------------------

Outcome fuel_model() {
  const FuelReport r = power_and_fuel(10.0, 1000.0, FuelModel{});
  const bool ok = std::abs(r.power_w - 198.599) <= 1e-3 && std::abs(r.endurance_s - 1448.6) <= 1.0;
  return {ok, "power(10) = " + fmt("%.6f", r.power_w) + " W (198.599 +- 1e-3), endurance = " +
                  fmt("%.3f", r.endurance_s) + " s = " + fmt("%.1f", r.endurance_s / 60) + " min (1448.6 +- 1)"};
}

Outcome gradient_suite() {
  double worst = 0.0;
  std::string where;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto rep = gradient_check(PolicyConfig::tiny(), seed);
    if (rep.max_relative_error > worst) {
      worst = rep.max_relative_error;
      where = rep.worst_parameter + " seed " + std::to_string(seed);
    }
  }
  return {worst < 1e-4, "max relative error " + fmt("%.3e", worst) + " at " + where + " over 20 seeds (< 1e-4)"};
}

EvrptwModel oracle_model(std::uint64_t seed) {
  const auto s = generate_scenario(4, 1, Distribution::uniform, TeamConfig{}, seed);
  const auto mission = make_mission(s, TeamConfig{});
  const int dest = seed % 2 ? kDepotNode : mission->ground_nodes().back();
  const double cap = s.fuel.capacity_kj;
  std::vector<int> tasks;
  for (int node = 1; node < mission->num_nodes(); ++node) {
    if (node == dest) continue;
    if (mission->flight_fuel(dest, node) * 2 <= cap ||
        mission->flight_fuel(kDepotNode, node) + mission->flight_fuel(node, dest) <= cap) {
      tasks.push_back(node);
    }
  }
  return build_evrptw_model(*mission, kDepotNode, dest, tasks, 1, {0.0}, 600.0);
}

Outcome oracle_equivalence() {
  int instances = 0, matched = 0, beaten = 0;
  for (std::uint64_t seed = 1; instances < 25 && seed < 200; ++seed) {
    const auto m = oracle_model(seed);
    double best = 0.0;
    try {
      best = evrptw_brute_force(m).objective_s;
    } catch (const Error&) {
      continue;  // no feasible single-UAV route; not an oracle instance
    }
    ++instances;
    bool all = true;
    for (auto method : {SearchMethod::gls, SearchMethod::tabu, SearchMethod::anneal}) {
      const double got = solve_evrptw(m, method, {10000, 0}, seed).solution.objective_s;
      if (got < best - 1e-9) ++beaten;
      if (std::abs(got - best) > 1e-9 * std::max(1.0, best)) all = false;
    }
    matched += all;
  }
  return {instances == 25 && matched >= 23 && beaten == 0,
          std::to_string(matched) + "/" + std::to_string(instances) +
              " instances matched by gls, tabu and anneal (>= 23/25); oracle beaten " + std::to_string(beaten) +
              " times (0)"};
}

Outcome constraint_validator() {
  int solved = 0, clean = 0, drops = 0, drops_tagged = 0, shifts = 0, shifts_tagged = 0;
  auto has = [](const std::vector<Violation>& v, Constraint c) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.constraint == c; });
  };
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Scenario s = generate_scenario(15, 5, Distribution::uniform, TeamConfig{}, Rng::mix(0xC4, seed));
    const SearchMethod method = seed % 3 == 0 ? SearchMethod::gls : seed % 3 == 1 ? SearchMethod::tabu
                                                                                  : SearchMethod::anneal;
    const auto r = solve_bilevel(s, TeamConfig{}, method, {500, 0}, seed);
    ++solved;
    bool ok = true;
    for (const auto& sub : r.heuristic.subproblems) {
      ok = ok && validate_evrptw(sub.model, sub.result.solution).empty() && sub.violations.empty();
      const auto& sol = sub.result.solution;
      const auto& route = sol.routes[0];
      const auto it = std::find_if(route.begin(), route.end(), [&](int v) { return sub.model.is_task(v); });
      if (it == route.end()) continue;
      const auto pos = static_cast<std::size_t>(it - route.begin());
      auto dropped = sol;
      dropped.routes[0].erase(dropped.routes[0].begin() + static_cast<long>(pos));
      dropped.arrival_s[0].erase(dropped.arrival_s[0].begin() + static_cast<long>(pos));
      dropped.fuel_kj[0].erase(dropped.fuel_kj[0].begin() + static_cast<long>(pos));
      ++drops;
      drops_tagged += has(validate_evrptw(sub.model, dropped), Constraint::visit_once);
      auto shifted = sol;
      shifted.arrival_s[0][pos] -= 60.0;
      ++shifts;
      shifts_tagged += has(validate_evrptw(sub.model, shifted), Constraint::time_propagation);
    }
    clean += ok;
  }
  return {clean == solved && drops_tagged == drops && shifts_tagged == shifts && drops > 0,
          std::to_string(clean) + "/" + std::to_string(solved) + " U15G5 solutions valid; dropped visit tagged " +
              std::to_string(drops_tagged) + "/" + std::to_string(drops) + " visit_once, shifted arrival tagged " +
              std::to_string(shifts_tagged) + "/" + std::to_string(shifts) + " time_propagation"};
}

Outcome masking_safety() {
  const PolicyParams params = init_policy(PolicyConfig::desk(), 11);
  const double tol = MissionOptions{}.fuel_tolerance_kj;
  int rollouts = 0, negative = 0, illegal = 0, horizon = 0, dead_end = 0, undeclared = 0;
  for (int k = 0; k < 20; ++k) {
    const TeamConfig team{1 + k % 3, 1 + (k % 4 == 3)};
    const Scenario s = generate_scenario(4 + k % 12, 1 + k % 5, static_cast<Distribution>(k % 3), team,
                                         Rng::mix(0x5AFE, k));
    try {
      const auto pool = rollout(s, team, params, DecodePolicy::sample(50, Rng::mix(0x5AFE, k, 1))).pool;
      const auto mission = make_mission(s, team);
      for (const auto& route : pool) {
        ++rollouts;
        const auto rep = replay(s, route, route.selection);
        if (!rep.legal) ++illegal;
        std::vector<double> fuel(static_cast<std::size_t>(team.num_uavs), s.fuel.capacity_kj);
        std::vector<int> node(static_cast<std::size_t>(team.num_uavs), kDepotNode);
        for (const auto& st : route.steps) {
          if (st.agent.kind == AgentKind::ugv) continue;
          const auto u = static_cast<std::size_t>(st.agent.index);
          const double left = fuel[u] - mission->flight_fuel(node[u], st.action.node);
          if (left < -tol || st.fuel_kj < -tol) ++negative;
          // A landing ends the sortie; the next one starts on a full tank.
          fuel[u] = st.action.kind == ActionKind::recharge ? s.fuel.capacity_kj : st.fuel_kj;
          node[u] = st.action.node;
        }
        if (route.status == Status::failure) {
          if (rep.final_state.step_count > mission->horizon()) {
            ++horizon;
          } else {
            ++dead_end;
          }
        }
      }
    } catch (const std::exception& e) {
      ++undeclared;
      std::cerr << "masking: instance " << k << ": " << e.what() << "\n";
    }
  }
  return {rollouts >= 1000 && negative == 0 && illegal == 0 && undeclared == 0,
          std::to_string(rollouts) + " sampled rollouts: " + std::to_string(negative) + " negative-fuel events, " +
              std::to_string(illegal) + " illegal actions, failures: " + std::to_string(horizon) + " horizon, " +
              std::to_string(dead_end) + " dead end, " + std::to_string(undeclared) + " other"};
}

Outcome learning_signal() {
  const auto& t = trained();
  EvalOptions opt;
  opt.timing = false;
  const auto r = evaluate_suite({drl_method("drl_greedy", "greedy@init", t.initial),
                                 drl_method("drl_greedy", "greedy@trained", t.sortie.policy)},
                                t.held_out, t.config.problem.team, opt);
  const double before = r.summary[0].mean_min, after = r.summary[1].mean_min;
  const double reduction = 1.0 - after / before;
  int swaps = 0;
  for (const auto& e : t.sortie.history) swaps += e.baseline_swapped;
  return {reduction >= 0.20 && swaps >= 1,
          "held-out greedy mean " + fmt("%.1f", before) + " -> " + fmt("%.1f", after) + " min (reduction " +
              fmt("%.1f", 100 * reduction) + "%, need >= 20%); baseline swaps " + std::to_string(swaps) + " (>= 1)"};
}

Outcome decode_dominance() {
  const auto& t = trained();
  EvalOptions opt;
  opt.timing = false;
  const auto r = evaluate_suite({drl_method("drl_greedy", "greedy", t.sortie.policy),
                                 drl_method("drl_sample64", "sample64", t.sortie.policy)},
                                t.held_out, t.config.problem.team, opt);
  const double greedy = r.summary[0].mean_min, sample = r.summary[1].mean_min;
  return {sample <= greedy && t.held_out.size() >= 50,
          "mean over " + std::to_string(t.held_out.size()) + " held-out instances: sample-64 " + fmt("%.2f", sample) +
              " <= greedy " + fmt("%.2f", greedy) + " min"};
}

Outcome selection_comparison() {
  auto& t = trained();
  if (!t.per_step_done) {
    TrainConfig c = t.config;
    c.selection = SelectionMode::per_step;
    TrainHooks hooks;
    hooks.timing = false;
    t.per_step = train(c, t.initial, 1, hooks);
    t.per_step_done = true;
  }
  std::vector<EvalReport> reports;
  for (const TeamConfig team : {TeamConfig{1, 1}, TeamConfig{2, 1}}) {
    std::vector<Scenario> set;
    for (int i = 0; i < 20; ++i) {
      set.push_back(generate_scenario(t.config.problem.aerial, t.config.problem.ground, Distribution::uniform, team,
                                      Rng::mix(0x4E1D, i)));
    }
    MethodSpec gls = parse_method("gls");
    gls.budget = {500, 0};
    EvalOptions opt;
    reports.push_back(evaluate_suite({gls, drl_method("drl_greedy", "drl_greedy", t.sortie.policy),
                                      drl_method("drl_sample16", "drl_sample16", t.sortie.policy),
                                      drl_method("drl_mf_greedy", "drl_mf_greedy", t.per_step.policy),
                                      drl_method("drl_mf_sample16", "drl_mf_sample16", t.per_step.policy)},
                                     set, team, opt));
  }
  const std::string text = comparison_table_text(reports);
  const std::string csv = comparison_table_csv(reports);
  std::cout << text;
  bool ok = true;
  for (const char* col : {"Obj. (min.)", "Gap (%)", "Time (sec)", "Win (%)"}) ok = ok && text.find(col) != std::string::npos;
  for (const char* m : {"drl_greedy", "drl_mf_greedy"}) ok = ok && csv.find(std::string("\n") + m + ",") != std::string::npos;
  ok = ok && csv.find("1U1G:obj_min") != std::string::npos && csv.find("2U1G:win_rate_pct") != std::string::npos;
  return {ok, "sortie-wise and per-step policies trained with identical budgets; table with Obj./Gap/Time/Win "
              "columns for 1U1G and 2U1G emitted above"};
}

Outcome bilevel_end_to_end() {
  int ok = 0;
  double worst = 0.0;
  int covered = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario s = generate_scenario(15, 5, Distribution::uniform, TeamConfig{}, Rng::mix(0xB1, seed));
    const auto r = solve_bilevel(s, TeamConfig{}, SearchMethod::gls, {2000, 0}, seed);
    const auto rep = replay(s, r.route, r.route.selection);
    const double diff = std::max(std::abs(rep.makespan_s - r.route.makespan_s),
                                 std::abs(rep.makespan_s - r.heuristic.makespan_s));
    worst = std::max(worst, diff);
    covered += rep.visited == rep.num_tasks;
    ok += rep.legal && rep.status == Status::success && diff <= 1e-6 && rep.visited == rep.num_tasks;
  }
  return {ok == 20, std::to_string(ok) + "/20 U15G5 traces replay legally; worst makespan difference " +
                        fmt("%.3e", worst) + " s (<= 1e-6); full coverage on " + std::to_string(covered) + "/20"};
}

Outcome dynamic_replanning() {
  const auto& t = trained();
  const MethodSpec planner = drl_method("drl_sample64", "drl_sample64", t.sortie.policy, 3);
  const TeamConfig team{2, 1};
  std::string detail;
  bool ok = true;
  auto drill = [&](const std::string& name, const Scenario& s, const ReplanEvent& ev) {
    const auto r = dynamic_replan(s, team, planner, {ev}, 5);
    const auto rep = replay(s, r.route, r.route.selection);
    const bool pass = rep.legal && rep.status == Status::success && rep.visited == rep.num_tasks &&
                      r.events[0].fired && r.events[0].feasible;
    ok = ok && pass;
    detail += (detail.empty() ? "" : "; ") + name + ": " + std::to_string(rep.visited) + "/" + std::to_string(rep.num_tasks) + " covered, " +
              (rep.legal ? "legal" : "ILLEGAL");
  };
  Scenario inject = generate_scenario(40, 10, Distribution::uniform, team, 0xD1);
  std::vector<TaskPoint> held;
  for (int i = static_cast<int>(inject.tasks.size()) - 1; i >= 0 && held.size() < 5; --i) {
    if (inject.tasks[static_cast<std::size_t>(i)].kind != TaskKind::aerial) continue;
    held.push_back(inject.tasks[static_cast<std::size_t>(i)]);
    inject.tasks.erase(inject.tasks.begin() + i);
  }
  for (std::size_t i = 0; i < inject.tasks.size(); ++i) inject.tasks[i].id = static_cast<int>(i);
  ReplanEvent add;
  add.trigger_value = 1;
  add.add_tasks = held;
  drill("45 + 5 injected at the first recharge", inject, add);

  const Scenario base = generate_scenario(20, 5, Distribution::uniform, team, 0xD2);
  for (const TeamConfig next : {TeamConfig{4, 2}, TeamConfig{1, 1}}) {
    ReplanEvent change;
    change.trigger_value = 2;
    change.set_team = next;
    drill("2U1G -> " + team_label(next), base, change);
  }
  return {ok, detail};
}

Outcome determinism() {
  kernels::set_thread_limit(1);
  std::vector<std::string> files;
  auto run_all = [&](const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const std::string& f) { return (dir / f).string(); };
    std::ostringstream out, err;
    std::vector<std::vector<std::string>> cmds{
        {"generate", "--aerial", "15", "--ground", "5", "--seed", "3", "-o", p("s.json")},
        {"solve", "-s", p("s.json"), "-m", "anneal", "--budget", "500", "--seed", "3", "-o", p("a.jsonl"),
         "--report", p("a.json")},
        {"train", "--profile", "desk", "--epochs", "1", "--seed", "3", "--no-timing", "-o", p("run")},
        {"solve", "-s", p("s.json"), "-m", "drl_sample16", "--seed", "3", "--checkpoint", p("run/final.ckpt"), "-o",
         p("d.jsonl")},
        {"evaluate", "--methods", "gls,drl_greedy,drl_sample8", "--checkpoint", p("run/final.ckpt"), "--instances",
         "5", "--budget", "200", "--seed", "3", "--no-timing", "--out-csv", p("e.csv"), "--out-json", p("e.json")}};
    for (auto args : cmds) {
      args.insert(args.begin(), "coroute");
      run_cli(args, out, err);
    }
    files = {"s.json", "a.jsonl", "a.json", "run/epoch_000.ckpt", "run/final.ckpt", "run/train_log.csv",
             "d.jsonl", "e.csv", "e.json"};
  };
  const fs::path root = fs::temp_directory_path() / "coroute_acceptance_det";
  run_all(root / "a");
  run_all(root / "b");
  int same = 0;
  std::string diff;
  for (const auto& f : files) {
    const bool exists = fs::exists(root / "a" / f) && fs::exists(root / "b" / f);
    if (exists && read_text_file(root / "a" / f) == read_text_file(root / "b" / f)) {
      ++same;
    } else {
      diff += " " + f;
    }
  }
  kernels::set_thread_limit(0);
  fs::remove_all(root);
  return {same == static_cast<int>(files.size()),
          std::to_string(same) + "/" + std::to_string(files.size()) +
              " outputs byte-identical across two single-thread runs" + (diff.empty() ? "" : " (differ:" + diff + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional filter: run only the listed criterion numbers.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fuel model", fuel_model},
      {"gradient suite", gradient_suite},
      {"oracle equivalence", oracle_equivalence},
      {"constraint validator", constraint_validator},
      {"masking safety", masking_safety},
      {"learning signal", learning_signal},
      {"decode dominance", decode_dominance},
      {"sortie-wise vs per-step selection", selection_comparison},
      {"bilevel end-to-end", bilevel_end_to_end},
      {"dynamic replanning", dynamic_replanning},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
