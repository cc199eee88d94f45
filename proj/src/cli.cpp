#include "coroute/cli.hpp"

#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "coroute/bilevel.hpp"
#include "coroute/checkpoint.hpp"
#include "coroute/error.hpp"
#include "coroute/evaluation.hpp"
#include "coroute/kernels.hpp"
#include "coroute/replan.hpp"
#include "coroute/rng.hpp"
#include "coroute/rollout.hpp"
#include "coroute/scenario_io.hpp"
#include "coroute/svg.hpp"
#include "coroute/training.hpp"
#include "json_codec.hpp"

namespace coroute {

namespace {

using nlohmann::json;

struct TeamFlags {
  int uavs = 0;  // 0 = take the scenario's team
  int ugvs = 0;

  void add(CLI::App* app) {
    app->add_option("--uavs", uavs, "Number of UAVs")->check(CLI::NonNegativeNumber);
    app->add_option("--ugvs", ugvs, "Number of UGVs")->check(CLI::NonNegativeNumber);
  }
  TeamConfig apply(TeamConfig team) const {
    if (uavs > 0) team.num_uavs = uavs;
    if (ugvs > 0) team.num_ugvs = ugvs;
    return team;
  }
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::shared_ptr<const PolicyParams> load_policy(const std::string& path) {
  require(!path.empty(), ErrorKind::invalid_argument, "this method needs --checkpoint");
  return std::make_shared<const PolicyParams>(policy_from_checkpoint(load_checkpoint(path)));
}

TeamConfig parse_team_label(const std::string& label) {
  const auto u = label.find('U');
  const auto g = label.find('G');
  require(u != std::string::npos && g == label.size() - 1 && u > 0 && g > u + 1, ErrorKind::invalid_argument,
          "team label must look like 2U1G, got '" + label + "'");
  TeamConfig t;
  try {
    t.num_uavs = std::stoi(label.substr(0, u));
    t.num_ugvs = std::stoi(label.substr(u + 1, g - u - 1));
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_argument, "team label must look like 2U1G, got '" + label + "'");
  }
  t.validate();
  return t;
}

std::string replay_json(const ReplayReport& rep) {
  json j;
  j["legal"] = rep.legal;
  j["status"] = rep.status == Status::success ? "success" : rep.status == Status::failure ? "failure" : "running";
  j["violations"] = rep.violations;
  j["visited"] = rep.visited;
  j["num_tasks"] = rep.num_tasks;
  j["makespan_s"] = rep.makespan_s;
  j["return_s"] = rep.return_s;
  return j.dump(2) + "\n";
}

// ---- verbs ---------------------------------------------------------------

struct GenerateCmd {
  int aerial = 15;
  int ground = 5;
  std::string dist = "uniform";
  std::uint64_t seed = 0;
  TeamFlags team;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--aerial", aerial, "Aerial task points")->required();
    app->add_option("--ground", ground, "Ground task points")->required();
    app->add_option("--dist", dist, "uniform | gaussian | rayleigh");
    app->add_option("--seed", seed, "Generator seed");
    team.add(app);
    app->add_option("-o,--out", out, "Scenario JSON path (default stdout)");
  }
  int run(std::ostream& o) const {
    const Scenario s = generate_scenario(aerial, ground, parse_distribution(dist), team.apply(TeamConfig{}), seed);
    emit(out, scenario_to_json(s), o);
    return kExitOk;
  }
};

struct SolveCmd {
  std::string scenario;
  std::string method;
  int budget = 2000;
  std::uint64_t seed = 0;
  std::string checkpoint;
  TeamFlags team;
  std::string out;
  std::string report;

  void add(CLI::App* app) {
    app->add_option("-s,--scenario", scenario, "Scenario JSON")->required();
    app->add_option("-m,--method", method, "gls | tabu | anneal | oracle | drl_greedy | drl_sample<N> | drl_mf_*")
        ->required();
    app->add_option("--budget", budget, "Search iterations per subproblem")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", seed, "Solver / sampling seed");
    app->add_option("--checkpoint", checkpoint, "Policy checkpoint for drl_* methods");
    team.add(app);
    app->add_option("-o,--out", out, "Trace JSONL path (default stdout)");
    app->add_option("--report", report, "Solver report JSON path");
  }
  int run(std::ostream& o) const {
    const Scenario s = load_scenario(scenario);
    const TeamConfig t = team.apply(s.team);
    MethodSpec m = parse_method(method);
    m.budget = {budget, 0};
    m.seed = seed;
    if (m.uses_policy()) {
      m.policy = load_policy(checkpoint);
      m.checkpoint = checkpoint;
    }
    RouteSolution route;
    std::string report_text;
    if (m.is_heuristic()) {
      const SearchMethod sm = parse_search_method(method);
      const BilevelResult r = solve_bilevel(s, t, sm, m.budget, seed);
      route = r.route;
      report_text = solver_report_json(r.heuristic, sm, m.budget, seed);
    } else {
      route = run_method(m, s, t, 0);
    }
    const CellResult cell = score_route(s, route);
    if (report_text.empty()) {
      json j = {{"method", method},       {"seed", seed},
                {"status", cell.failed ? "failure" : "success"},
                {"return_s", cell.objective_s},
                {"makespan_s", route.makespan_s}};
      if (!m.checkpoint.empty()) j["checkpoint"] = m.checkpoint;
      report_text = j.dump(2) + "\n";
    }
    emit(out, trace_to_jsonl(route), o);
    if (!report.empty()) write_text_file(report, report_text);
    if (cell.failed) fail(ErrorKind::infeasible, method + ": " + cell.error);
    return kExitOk;
  }
};

struct TrainCmd {
  std::string profile = "desk";
  int epochs = -1;
  int batches = -1;
  int batch_size = -1;
  double lr = -1;
  double decay = -1;
  double significance = -1;
  int ttest_batches = -1;
  std::string selection;
  int aerial = -1;
  int ground = -1;
  std::string dist;
  TeamFlags team;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool no_timing = false;

  void add(CLI::App* app) {
    app->add_option("--profile", profile, "desk | paper | tiny")->check(CLI::IsMember({"desk", "paper", "tiny"}));
    app->add_option("--epochs", epochs, "Epochs");
    app->add_option("--batches", batches, "Batches per epoch");
    app->add_option("--batch-size", batch_size, "Instances per batch");
    app->add_option("--lr", lr, "Initial learning rate");
    app->add_option("--decay", decay, "Per-epoch learning-rate decay");
    app->add_option("--alpha", significance, "Baseline-swap significance level");
    app->add_option("--ttest-batches", ttest_batches, "Final batches of each epoch used by the t-test (0 = all)");
    app->add_option("--selection", selection, "sortie_wise | per_step");
    app->add_option("--aerial", aerial, "Aerial task points per instance");
    app->add_option("--ground", ground, "Ground task points per instance");
    app->add_option("--dist", dist, "uniform | gaussian | rayleigh");
    team.add(app);
    app->add_option("--seed", seed, "Training seed (also initializes the weights)");
    app->add_option("-o,--out-dir", out_dir, "Directory for checkpoints and the batch log")->required();
    app->add_flag("--no-timing", no_timing, "Write 0 for wall times so logs are byte-identical");
  }
  TrainConfig config() const {
    TrainConfig c = profile == "paper" ? TrainConfig::paper() : TrainConfig::desk();
    if (profile == "tiny") c.policy = PolicyConfig::tiny();
    if (epochs >= 0) c.epochs = epochs;
    if (batches >= 0) c.batches_per_epoch = batches;
    if (batch_size >= 0) c.batch_size = batch_size;
    if (lr >= 0) c.lr0 = lr;
    if (decay >= 0) c.decay = decay;
    if (significance >= 0) c.significance = significance;
    if (ttest_batches >= 0) c.ttest_batches = ttest_batches;
    if (!selection.empty()) c.selection = parse_selection(selection);
    if (aerial >= 0) c.problem.aerial = aerial;
    if (ground >= 0) c.problem.ground = ground;
    if (!dist.empty()) c.problem.distribution = parse_distribution(dist);
    c.problem.team = team.apply(c.problem.team);
    return c;
  }
  int run(std::ostream& o) const {
    const TrainConfig c = config();
    c.validate();
    TrainHooks hooks;
    hooks.checkpoint_dir = out_dir;
    hooks.timing = !no_timing;
    hooks.on_epoch = [&](const EpochRecord& e, const TrainState&) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %d mean_return_min %.3f failure_rate %.3f p %.4g%s\n", e.epoch,
                    e.mean_return_min, e.failure_rate, e.p_value, e.baseline_swapped ? " baseline_swapped" : "");
      o << line << std::flush;
    };
    const TrainState st = train(c, init_policy(c.policy, seed), seed, hooks);
    const std::filesystem::path dir(out_dir);
    save_checkpoint(training_checkpoint(st, c, seed), dir / "final.ckpt");
    write_text_file(dir / "train_log.csv", batch_log_csv(st.batches));
    return kExitOk;
  }
};

struct EvaluateCmd {
  std::vector<std::string> methods;
  std::string checkpoint;
  std::string checkpoint_mf;
  int instances = 50;
  int aerial = 8;
  int ground = 3;
  std::string dist = "uniform";
  std::vector<std::string> teams{"1U1G"};
  std::uint64_t seed = 0;
  int budget = 2000;
  bool no_timing = false;
  std::string out_csv;
  std::string out_json;

  void add(CLI::App* app) {
    app->add_option("--methods", methods, "Comma-separated method list")->required()->delimiter(',');
    app->add_option("--checkpoint", checkpoint, "Policy checkpoint for drl_* methods");
    app->add_option("--checkpoint-mf", checkpoint_mf, "Checkpoint for drl_mf_* methods (default --checkpoint)");
    app->add_option("--instances", instances, "Generated test instances per configuration")
        ->check(CLI::PositiveNumber);
    app->add_option("--aerial", aerial, "Aerial task points per instance");
    app->add_option("--ground", ground, "Ground task points per instance");
    app->add_option("--dist", dist, "uniform | gaussian | rayleigh");
    app->add_option("--teams", teams, "Team configurations, e.g. 1U1G,2U1G")->delimiter(',');
    app->add_option("--seed", seed, "Instance and method seed");
    app->add_option("--budget", budget, "Search iterations per subproblem")->check(CLI::NonNegativeNumber);
    app->add_flag("--no-timing", no_timing, "Report 0 s wall times so reports are byte-identical");
    app->add_option("--out-csv", out_csv, "Comparison table CSV");
    app->add_option("--out-json", out_json, "Per-configuration reports with the objective matrices");
  }
  int run(std::ostream& o) const {
    std::shared_ptr<const PolicyParams> policy, policy_mf;
    std::vector<MethodSpec> specs;
    for (const auto& text : methods) {
      MethodSpec m = parse_method(text);
      m.budget = {budget, 0};
      m.seed = seed;
      if (m.uses_policy()) {
        const bool mf = m.selection() == SelectionMode::per_step && !checkpoint_mf.empty();
        auto& slot = mf ? policy_mf : policy;
        if (!slot) slot = load_policy(mf ? checkpoint_mf : checkpoint);
        m.policy = slot;
        m.checkpoint = mf ? checkpoint_mf : checkpoint;
      }
      specs.push_back(std::move(m));
    }
    std::vector<EvalReport> reports;
    for (const auto& label : teams) {
      const TeamConfig team = parse_team_label(label);
      std::vector<Scenario> set;
      for (int i = 0; i < instances; ++i) {
        set.push_back(generate_scenario(aerial, ground, parse_distribution(dist), team,
                                        Rng::mix(seed, static_cast<std::uint64_t>(i))));
      }
      EvalOptions opt;
      opt.label = label;
      opt.timing = !no_timing;
      opt.seed = seed;
      reports.push_back(evaluate_suite(specs, set, team, opt));
    }
    o << comparison_table_text(reports);
    if (!out_csv.empty()) write_text_file(out_csv, comparison_table_csv(reports));
    if (!out_json.empty()) {
      json all = json::array();
      for (const auto& r : reports) all.push_back(json::parse(report_json(r)));
      write_text_file(out_json, json{{"version", 1}, {"reports", all}}.dump(2) + "\n");
    }
    return kExitOk;
  }
};

struct ReplanCmd {
  std::string scenario;
  std::string planner = "drl_sample16";
  std::string checkpoint;
  std::string events;
  std::uint64_t seed = 0;
  TeamFlags team;
  std::string out;
  std::string report;

  void add(CLI::App* app) {
    app->add_option("-s,--scenario", scenario, "Scenario JSON")->required();
    app->add_option("--planner", planner, "Planner method (drl_* for mid-mission replanning)");
    app->add_option("--checkpoint", checkpoint, "Policy checkpoint");
    app->add_option("--events", events, "JSON list of events")->required();
    app->add_option("--seed", seed, "Sampling seed");
    team.add(app);
    app->add_option("-o,--out", out, "Stitched trace JSONL path (default stdout)");
    app->add_option("--report", report, "Per-event outcome JSON path");
  }
  int run(std::ostream& o) const {
    const Scenario s = load_scenario(scenario);
    MethodSpec m = parse_method(planner);
    m.seed = seed;
    if (m.uses_policy()) m.policy = load_policy(checkpoint);
    json doc;
    try {
      doc = json::parse(read_text_file(events));
    } catch (const json::exception& e) {
      fail(ErrorKind::invalid_argument, std::string("events file: ") + e.what());
    }
    const json& list = doc.is_object() ? doc.at("events") : doc;
    std::vector<ReplanEvent> evs;
    for (const auto& e : list) evs.push_back(codec::event_from_json(e));
    const ReplanResult r = dynamic_replan(s, team.apply(s.team), m, evs, seed);
    emit(out, trace_to_jsonl(r.route), o);
    bool ok = r.route.status == Status::success;
    json outcomes = json::array();
    for (const auto& e : r.events) {
      ok = ok && e.fired && e.feasible;
      outcomes.push_back({{"event", e.event}, {"fired", e.fired}, {"before_step", e.before_step},
                          {"switch_time_s", e.switch_time_s}, {"feasible", e.feasible}, {"message", e.message}});
    }
    if (!report.empty()) {
      json segs = json::array();
      for (const auto& g : r.segments) {
        segs.push_back({{"event", g.event}, {"first_step", g.first_step}, {"executed_steps", g.executed_steps},
                        {"start_time_s", g.start_time_s}, {"plan_return_s", g.plan.return_s}});
      }
      write_text_file(report, json{{"planner", planner},
                                   {"seed", seed},
                                   {"status", r.route.status == Status::success ? "success" : "failure"},
                                   {"makespan_s", r.route.makespan_s},
                                   {"events", outcomes},
                                   {"segments", segs}}
                                  .dump(2) +
                                  "\n");
    }
    if (!ok) fail(ErrorKind::infeasible, "replanned mission did not cover every point");
    return kExitOk;
  }
};

struct PlotCmd {
  std::string scenario;
  std::string trace;
  std::string out;
  PlotSpec spec;
  bool no_road = false;

  void add(CLI::App* app) {
    app->add_option("-s,--scenario", scenario, "Scenario JSON")->required();
    app->add_option("-t,--trace", trace, "Trace JSONL (omit for a scenario-only plot)");
    app->add_option("-o,--out", out, "SVG path (default stdout)");
    app->add_option("--uav-color", spec.uav_color, "UAV path color");
    app->add_option("--ugv-color", spec.ugv_color, "UGV path color");
    app->add_option("--visited-opacity", spec.visited_opacity, "Fill opacity of visited points")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--width", spec.width_px, "Viewport width in px")->check(CLI::PositiveNumber);
    app->add_option("--height", spec.height_px, "Viewport height in px")->check(CLI::PositiveNumber);
    app->add_flag("--no-road", no_road, "Hide the road network");
  }
  int run(std::ostream& o) const {
    const Scenario s = load_scenario(scenario);
    RouteSolution route;
    if (trace.empty()) {
      route.team = s.team;
      route.selection = SelectionMode::scripted;
    } else {
      route = load_trace(trace);
    }
    PlotSpec ps = spec;
    ps.show_road = !no_road;
    emit(out, export_svg(route, s, ps), o);
    return kExitOk;
  }
};

struct ValidateCmd {
  std::string scenario;
  std::string trace;
  std::string mode;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("-s,--scenario", scenario, "Scenario JSON")->required();
    app->add_option("-t,--trace", trace, "Trace JSONL")->required();
    app->add_option("--mode", mode, "Replay selection mode (default: the trace's own)");
    app->add_option("-o,--out", out, "Report JSON path (default stdout)");
  }
  int run(std::ostream& o) const {
    const Scenario s = load_scenario(scenario);
    const RouteSolution route = load_trace(trace);
    const ReplayReport rep = replay(s, route, mode.empty() ? route.selection : parse_selection(mode));
    emit(out, replay_json(rep), o);
    if (!rep.legal) fail(ErrorKind::infeasible, std::to_string(rep.violations.size()) + " violation(s)");
    if (rep.status != Status::success) fail(ErrorKind::infeasible, "the trace does not complete the mission");
    return kExitOk;
  }
};

int exit_for(ErrorKind kind) { return kind == ErrorKind::invalid_argument ? kExitUsage : kExitFailure; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cooperative UAV-UGV route planning: instance generation, heuristic and learned solvers, "
               "evaluation and replanning."};
  app.name(args.empty() ? "coroute" : args[0]);
  app.require_subcommand(1);
  app.set_config("--config", "", "Read default flag values from an INI/TOML file")->envname("COROUTE_CONFIG");
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = all)")
      ->envname("COROUTE_THREADS")
      ->check(CLI::NonNegativeNumber);

  GenerateCmd generate;
  SolveCmd solve;
  TrainCmd train_cmd;
  EvaluateCmd evaluate;
  ReplanCmd replan;
  PlotCmd plot;
  ValidateCmd validate;
  auto* g = app.add_subcommand("generate", "Sample a scenario and write it as JSON");
  generate.add(g);
  auto* so = app.add_subcommand("solve", "Plan one scenario with a heuristic, the oracle or a policy");
  solve.add(so);
  auto* tr = app.add_subcommand("train", "Train a policy with REINFORCE and a greedy baseline");
  train_cmd.add(tr);
  auto* ev = app.add_subcommand("evaluate", "Compare methods on generated instances");
  evaluate.add(ev);
  auto* rp = app.add_subcommand("replan", "Execute a plan with mid-mission events and replanning");
  replan.add(rp);
  auto* pl = app.add_subcommand("plot", "Render a scenario and trace as SVG");
  plot.add(pl);
  auto* va = app.add_subcommand("validate", "Replay a trace and report every violation");
  validate.add(va);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("coroute");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }
  if (threads > 0) kernels::set_thread_limit(threads);

  try {
    if (g->parsed()) return generate.run(out);
    if (so->parsed()) return solve.run(out);
    if (tr->parsed()) return train_cmd.run(out);
    if (ev->parsed()) return evaluate.run(out);
    if (rp->parsed()) return replan.run(out);
    if (pl->parsed()) return plot.run(out);
    if (va->parsed()) return validate.run(out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace coroute
