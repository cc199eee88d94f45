#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

#include "coroute/bilevel.hpp"
#include "coroute/checkpoint.hpp"
#include "coroute/cli.hpp"
#include "coroute/error.hpp"
#include "coroute/evaluation.hpp"
#include "coroute/scenario_io.hpp"
#include "coroute/svg.hpp"
#include "coroute/training.hpp"
#include "doctest.h"

using namespace coroute;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "coroute");
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("coroute_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string path(const fs::path& dir, const std::string& file) { return (dir / file).string(); }

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit 2 with usage text") {
  auto r = cli({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: usage:", 0) == 0);
  CHECK(r.err.find("Usage:") != std::string::npos);
  r = cli({});
  CHECK(r.code == 2);
  r = cli({"generate", "--aerial", "3", "--ground", "1", "--colour", "red"});
  CHECK(r.code == 2);
  r = cli({"solve", "--method", "gls"});
  CHECK(r.code == 2);
  r = cli({"--help"});
  CHECK(r.code == 0);
  for (const char* verb : {"generate", "solve", "train", "evaluate", "replan", "plot", "validate"}) {
    CHECK(r.out.find(verb) != std::string::npos);
  }
}

TEST_CASE("generate equals the library call and is reproducible") {
  const auto dir = workdir("generate");
  auto r = cli({"generate", "--aerial", "15", "--ground", "5", "--dist", "uniform", "--seed", "1", "-o",
                path(dir, "a.json")});
  REQUIRE(r.code == 0);
  const Scenario lib = generate_scenario(15, 5, Distribution::uniform, TeamConfig{}, 1);
  CHECK(read_text_file(dir / "a.json") == scenario_to_json(lib));
  CHECK(load_scenario(dir / "a.json") == lib);
  r = cli({"generate", "--aerial", "15", "--ground", "5", "--seed", "1"});
  CHECK(r.out == scenario_to_json(lib));
  r = cli({"generate", "--aerial", "15", "--ground", "5", "--dist", "cauchy"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: invalid-argument:", 0) == 0);
}

TEST_CASE("solve and validate a heuristic plan") {
  const auto dir = workdir("solve");
  const Scenario s = generate_scenario(10, 3, Distribution::gaussian, TeamConfig{}, 4);
  save_scenario(s, dir / "s.json");
  auto r = cli({"solve", "-s", path(dir, "s.json"), "-m", "tabu", "--budget", "300", "--seed", "2", "-o",
                path(dir, "t.jsonl"), "--report", path(dir, "r.json")});
  REQUIRE(r.code == 0);
  const auto lib = solve_bilevel(s, s.team, SearchMethod::tabu, {300, 0}, 2);
  CHECK(read_text_file(dir / "t.jsonl") == trace_to_jsonl(lib.route));
  CHECK(read_text_file(dir / "r.json") == solver_report_json(lib.heuristic, SearchMethod::tabu, {300, 0}, 2));

  r = cli({"validate", "-s", path(dir, "s.json"), "-t", path(dir, "t.jsonl")});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"violations\": []") != std::string::npos);
  CHECK(r.out.find("\"legal\": true") != std::string::npos);

  auto tampered = lib.route;
  tampered.steps[2].clock_s += 30.0;
  save_trace(tampered, dir / "bad.jsonl");
  r = cli({"validate", "-s", path(dir, "s.json"), "-t", path(dir, "bad.jsonl")});
  CHECK(r.code == 1);
  CHECK(r.out.find("clock mismatch") != std::string::npos);
  CHECK(r.err.rfind("error: infeasible:", 0) == 0);

  r = cli({"solve", "-s", path(dir, "missing.json"), "-m", "gls"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: io:", 0) == 0);
}

TEST_CASE("policy verbs: train, solve with a checkpoint, evaluate, replan") {
  const auto dir = workdir("policy");
  const std::vector<std::string> train_args{"train", "--profile", "tiny", "--epochs", "1", "--batches", "2",
                                            "--batch-size", "4", "--aerial", "5", "--ground", "2", "--seed", "3",
                                            "--no-timing", "-o"};
  auto args = train_args;
  args.push_back(path(dir, "run1"));
  REQUIRE(cli(args).code == 0);
  args.back() = path(dir, "run2");
  REQUIRE(cli(args).code == 0);
  for (const char* f : {"epoch_000.ckpt", "final.ckpt", "train_log.csv"}) {
    CHECK(read_text_file(dir / "run1" / f) == read_text_file(dir / "run2" / f));
  }

  TrainConfig c = TrainConfig::desk();
  c.policy = PolicyConfig::tiny();
  c.epochs = 1;
  c.batches_per_epoch = 2;
  c.batch_size = 4;
  c.problem.aerial = 5;
  c.problem.ground = 2;
  TrainHooks hooks;
  hooks.timing = false;
  const auto st = train(c, init_policy(c.policy, 3), 3, hooks);
  CHECK(policy_from_checkpoint(load_checkpoint(dir / "run1" / "final.ckpt")) == st.policy);
  CHECK(read_text_file(dir / "run1" / "train_log.csv") == batch_log_csv(st.batches));

  const Scenario s = generate_scenario(6, 2, Distribution::uniform, TeamConfig{}, 8);
  save_scenario(s, dir / "s.json");
  auto r = cli({"solve", "-s", path(dir, "s.json"), "-m", "drl_sample8", "--seed", "4", "--checkpoint",
                path(dir, "run1/final.ckpt"), "-o", path(dir, "d.jsonl")});
  MethodSpec m = parse_method("drl_sample8");
  m.seed = 4;
  m.policy = std::make_shared<const PolicyParams>(st.policy);
  const auto route = run_method(m, s, s.team, 0);
  CHECK(r.code == (score_route(s, route).failed ? 1 : 0));
  CHECK(read_text_file(dir / "d.jsonl") == trace_to_jsonl(route));
  r = cli({"solve", "-s", path(dir, "s.json"), "-m", "drl_greedy"});
  CHECK(r.code == 2);

  const std::vector<std::string> eval_args{
      "evaluate", "--methods", "gls,drl_greedy,drl_sample4", "--checkpoint", path(dir, "run1/final.ckpt"),
      "--instances", "3", "--aerial", "5", "--ground", "2", "--teams", "1U1G,2U1G", "--budget", "100",
      "--no-timing", "--seed", "6"};
  args = eval_args;
  args.insert(args.end(), {"--out-csv", path(dir, "e1.csv"), "--out-json", path(dir, "e1.json")});
  r = cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1U1G Obj. (min.)") != std::string::npos);
  CHECK(r.out.find("2U1G Win (%)") != std::string::npos);
  args = eval_args;
  args.insert(args.end(), {"--out-csv", path(dir, "e2.csv"), "--out-json", path(dir, "e2.json")});
  REQUIRE(cli(args).code == 0);
  CHECK(read_text_file(dir / "e1.csv") == read_text_file(dir / "e2.csv"));
  CHECK(read_text_file(dir / "e1.json") == read_text_file(dir / "e2.json"));
  CHECK(read_text_file(dir / "e1.json").find("\"objective_s\"") != std::string::npos);

  write_text_file(dir / "ev.json",
                  R"([{"trigger":"recharge_event","value":1,"team":{"num_uavs":2,"num_ugvs":1,"v_a":10.0,)"
                  R"("v_g":4.5,"recharge_time_s":300.0}}])");
  r = cli({"replan", "-s", path(dir, "s.json"), "--planner", "drl_sample8", "--checkpoint",
           path(dir, "run1/final.ckpt"), "--events", path(dir, "ev.json"), "-o", path(dir, "rp.jsonl"), "--report",
           path(dir, "rp.json")});
  CHECK(r.code != 2);
  const auto stitched = load_trace(dir / "rp.jsonl");
  REQUIRE(stitched.events.size() == 1);
  CHECK(replay(s, stitched, stitched.selection).legal);
  CHECK(read_text_file(dir / "rp.json").find("\"fired\": true") != std::string::npos);
  write_text_file(dir / "broken.json", "[{\"trigger\":");
  r = cli({"replan", "-s", path(dir, "s.json"), "--checkpoint", path(dir, "run1/final.ckpt"), "--events",
           path(dir, "broken.json")});
  CHECK(r.code == 2);
}

TEST_CASE("thread count and config file from the environment") {
  const auto dir = workdir("env");
  write_text_file(dir / "cfg.ini", "[generate]\naerial=4\nground=2\nseed=9\n");
  ::setenv("COROUTE_CONFIG", path(dir, "cfg.ini").c_str(), 1);
  ::setenv("COROUTE_THREADS", "1", 1);
  auto r = cli({"generate"});
  ::unsetenv("COROUTE_CONFIG");
  ::unsetenv("COROUTE_THREADS");
  REQUIRE(r.code == 0);
  CHECK(r.out == scenario_to_json(generate_scenario(4, 2, Distribution::uniform, TeamConfig{}, 9)));
  r = cli({"--threads", "2", "generate", "--aerial", "2", "--ground", "1"});
  CHECK(r.code == 0);
  r = cli({"--threads", "-1", "generate", "--aerial", "2", "--ground", "1"});
  CHECK(r.code == 2);
}

TEST_CASE("svg: scenario-only plot") {
  const Scenario s = generate_scenario(6, 2, Distribution::uniform, TeamConfig{}, 2);
  RouteSolution empty;
  empty.selection = SelectionMode::scripted;
  const std::string svg = export_svg(empty, s);
  CHECK(svg.rfind("<?xml version=\"1.0\"", 0) == 0);
  CHECK(svg.find("version=\"1.1\"") != std::string::npos);
  CHECK(count(svg, "<polyline") == 0);
  CHECK(count(svg, "class=\"task ") == 8);
  CHECK(count(svg, " unvisited\"") == 8);
  CHECK(count(svg, "class=\"depot\"") == 1);
  CHECK(count(svg, "<line ") == static_cast<int>(s.road.edges.size()));
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("svg: one dashed and one solid polyline for a 1 UAV - 1 UGV plan") {
  const Scenario s = generate_scenario(8, 3, Distribution::uniform, TeamConfig{}, 5);
  const auto route = solve_bilevel(s, TeamConfig{}, SearchMethod::gls, {200, 0}, 1).route;
  const std::string svg = export_svg(route, s);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(count(svg, "class=\"agent uav\"") == 1);
  CHECK(count(svg, "stroke-dasharray") == 1);
  int services = 0;
  for (const auto& st : route.steps) services += st.agent.kind == AgentKind::ugv;
  CHECK(count(svg, "class=\"rendezvous\"") == services);
  CHECK(count(svg, " visited\"") == replay(s, route, route.selection).visited);
  CHECK(export_svg(route, s) == svg);
}

TEST_CASE("svg: opacity follows the visitation log of a partial trace") {
  const Scenario s = generate_scenario(8, 3, Distribution::uniform, TeamConfig{}, 5);
  auto route = solve_bilevel(s, TeamConfig{}, SearchMethod::gls, {200, 0}, 1).route;
  route.steps.resize(4);
  route.status = Status::running;
  const auto rep = replay(s, route, route.selection);
  REQUIRE(rep.legal);
  const std::string svg = export_svg(route, s);
  const std::regex task_re("class=\"task (aerial|ground) (visited|unvisited)\"[^>]*fill-opacity=\"([0-9.]+)\"");
  int visited = 0;
  for (std::sregex_iterator it(svg.begin(), svg.end(), task_re), end; it != end; ++it) {
    const bool v = (*it)[2] == "visited";
    visited += v;
    CHECK((*it)[3] == (v ? "0.35" : "1.00"));
  }
  CHECK(visited == rep.visited);
  CHECK(visited > 0);
  CHECK(visited < 11);
}

TEST_CASE("svg: inconsistent traces are refused with the replay violations") {
  const Scenario s = generate_scenario(8, 3, Distribution::uniform, TeamConfig{}, 5);
  auto route = solve_bilevel(s, TeamConfig{}, SearchMethod::gls, {200, 0}, 1).route;
  route.steps[1].fuel_kj += 5.0;
  try {
    export_svg(route, s);
    FAIL("expected a refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
    CHECK(std::string(e.what()).find("fuel mismatch") != std::string::npos);
  }
  const auto dir = workdir("plot");
  save_scenario(s, dir / "s.json");
  save_trace(route, dir / "t.jsonl");
  CHECK(cli({"plot", "-s", path(dir, "s.json"), "-t", path(dir, "t.jsonl")}).code == 1);
  auto ok = cli({"plot", "-s", path(dir, "s.json"), "--no-road"});
  CHECK(ok.code == 0);
  CHECK(count(ok.out, "<line ") == 0);
}

TEST_CASE("viewport transform") {
  PlotSpec spec;
  const Point lo = to_viewport({0, 0}, 20000, spec);
  const Point hi = to_viewport({20000, 20000}, 20000, spec);
  CHECK(lo.x == spec.margin_px);
  CHECK(lo.y == spec.height_px - spec.margin_px);
  CHECK(hi.x == spec.width_px - spec.margin_px);
  CHECK(hi.y == spec.margin_px);
}
