#include <algorithm>
#include <memory>

#include <omp.h>

#include "coroute/error.hpp"
#include "coroute/evaluation.hpp"
#include "coroute/oracle.hpp"
#include "coroute/replan.hpp"
#include "coroute/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace coroute;
using coroute::testing::add_task;
using coroute::testing::line_scenario;

namespace {

std::shared_ptr<const PolicyParams> untrained(std::uint64_t seed = 1) {
  return std::make_shared<const PolicyParams>(init_policy(PolicyConfig::tiny(), seed));
}

MethodSpec drl(const std::string& text, std::uint64_t seed = 0) {
  MethodSpec m = parse_method(text);
  m.policy = untrained();
  m.seed = seed;
  return m;
}

MethodSpec heuristic(const std::string& text, int iterations = 300) {
  MethodSpec m = parse_method(text);
  m.budget = {iterations, 0};
  return m;
}

CellResult cell(double objective_s, double wall_s) {
  CellResult c;
  c.objective_s = objective_s;
  c.wall_s = wall_s;
  return c;
}

// Moves `count` aerial tasks out of a generated scenario so they can be
// injected later; ids of the remaining tasks are renumbered.
std::vector<TaskPoint> hold_out(Scenario& s, int count) {
  std::vector<TaskPoint> held;
  for (int i = static_cast<int>(s.tasks.size()) - 1; i >= 0 && static_cast<int>(held.size()) < count; --i) {
    if (s.tasks[static_cast<std::size_t>(i)].kind != TaskKind::aerial) continue;
    held.push_back(s.tasks[static_cast<std::size_t>(i)]);
    s.tasks.erase(s.tasks.begin() + i);
  }
  for (std::size_t i = 0; i < s.tasks.size(); ++i) s.tasks[i].id = static_cast<int>(i);
  return held;
}

}  // namespace

TEST_CASE("win rate formula") {
  std::vector<std::vector<double>> obj(2, std::vector<double>(100));
  for (int i = 0; i < 100; ++i) {
    obj[0][static_cast<std::size_t>(i)] = i < 40 ? 1.0 : 3.0;
    obj[1][static_cast<std::size_t>(i)] = 2.0;
  }
  const auto w = win_rate(obj);
  CHECK(w[0] == doctest::Approx(40.0));
  CHECK(w[1] == doctest::Approx(60.0));
}

TEST_CASE("win rate credits every tied method") {
  const std::vector<std::vector<double>> obj{{5, 6, 7}, {5, 6, 7}, {5, 6, 7}};
  for (double w : win_rate(obj)) CHECK(w == 100.0);
}

TEST_CASE("win rate matches an independent recount") {
  Rng rng(9);
  std::vector<std::vector<double>> obj(5, std::vector<double>(20));
  for (auto& row : obj) {
    for (auto& v : row) v = static_cast<double>(rng.below(4));
  }
  const auto w = win_rate(obj);
  for (std::size_t m = 0; m < 5; ++m) {
    int wins = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      bool lowest = true;
      for (std::size_t o = 0; o < 5; ++o) lowest = lowest && obj[m][i] <= obj[o][i];
      wins += lowest;
    }
    CHECK(w[m] == doctest::Approx(wins * 5.0));
  }
  CHECK_THROWS_AS(win_rate({{1, 2}, {1}}), Error);
}

TEST_CASE("summary: gap, win rate and spread come from one matrix") {
  EvalReport r;
  r.methods = {"a", "b"};
  r.instances = {"i0", "i1", "i2"};
  r.cells = {{cell(600, 1), cell(1200, 1), cell(1800, 1)}, {cell(1200, 3), cell(2400, 3), cell(3600, 3)}};
  summarize(r);
  CHECK(r.summary[0].win_rate_pct == 100.0);
  CHECK(r.summary[1].win_rate_pct == 0.0);
  CHECK(r.summary[0].gap_pct == 0.0);
  CHECK(r.summary[1].gap_pct == doctest::Approx(100.0));
  CHECK(r.summary[0].mean_min == doctest::Approx(20.0));
  CHECK(r.summary[0].std_min == doctest::Approx(10.0));
  CHECK(r.summary[0].best_min == doctest::Approx(10.0));
  CHECK(r.summary[1].mean_time_s == doctest::Approx(3.0));
  for (const auto& s : r.summary) CHECK(s.gap_pct >= 0.0);
}

TEST_CASE("method names") {
  CHECK(parse_method("drl_sample64").samples == 64);
  CHECK(parse_method("drl_sample64").kind == MethodKind::drl_sample);
  CHECK(parse_method("drl_mf_sample16").selection() == SelectionMode::per_step);
  CHECK(parse_method("drl_greedy").selection() == SelectionMode::sortie_wise);
  CHECK(parse_method("tabu").is_heuristic());
  CHECK_THROWS_AS(parse_method("drl_sample0"), Error);
  CHECK_THROWS_AS(parse_method("drl_samplex"), Error);
  CHECK_THROWS_AS(parse_method("lkh"), Error);
  CHECK_THROWS_AS(parse_method("drl_greedy").validate(), Error);
}

TEST_CASE("oracle: one task next to the depot") {
  Scenario s = line_scenario(5, 2000, 2);
  add_task(s, 6000, 10500, TaskKind::aerial);
  const auto r = brute_force_oracle(s);
  // 500 m out and back at 10 m/s, then the final recharge service.
  CHECK(r.makespan_s == doctest::Approx(100.0 + 300.0).epsilon(1e-12));
  CHECK(score_route(s, r.route).objective_s == doctest::Approx(r.makespan_s).epsilon(1e-12));
}

TEST_CASE("oracle: symmetric pair ties across orderings") {
  Scenario a = line_scenario(5, 2000, 2);
  add_task(a, 6000, 11000, TaskKind::aerial);
  add_task(a, 6000, 9000, TaskKind::aerial);
  Scenario b = line_scenario(5, 2000, 2);
  add_task(b, 6000, 9000, TaskKind::aerial);
  add_task(b, 6000, 11000, TaskKind::aerial);
  const double ma = brute_force_oracle(a).makespan_s;
  CHECK(ma == doctest::Approx(brute_force_oracle(b).makespan_s).epsilon(1e-12));
  CHECK(ma == doctest::Approx(100.0 + 200.0 + 100.0 + 300.0).epsilon(1e-12));
}

TEST_CASE("oracle size limits") {
  Scenario s = generate_scenario(6, 1, Distribution::uniform, TeamConfig{}, 3);
  try {
    brute_force_oracle(s);
    FAIL("expected size_limit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::size_limit);
  }
  Scenario g = generate_scenario(2, 3, Distribution::uniform, TeamConfig{}, 3);
  CHECK_THROWS_AS(brute_force_oracle(g), Error);
  Scenario ok = generate_scenario(3, 1, Distribution::uniform, TeamConfig{}, 3);
  CHECK_THROWS_AS(brute_force_oracle(ok, TeamConfig{2, 1}), Error);
}

TEST_CASE("oracle dominates every method on five-task fixtures") {
  const std::vector<MethodSpec> methods{heuristic("gls"), heuristic("tabu"), heuristic("anneal"),
                                        drl("drl_greedy"), drl("drl_sample16", 5)};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Scenario s = generate_scenario(4, 1, Distribution::uniform, TeamConfig{}, seed);
    const auto oracle = brute_force_oracle(s);
    CHECK(score_route(s, oracle.route).objective_s == doctest::Approx(oracle.makespan_s).epsilon(1e-12));
    for (const auto& m : methods) {
      const auto cell = score_route(s, run_method(m, s, TeamConfig{}, seed));
      CHECK(cell.objective_s >= oracle.makespan_s - 1e-6);
    }
  }
}

TEST_CASE("suite with the oracle: zero gap and replay-scored cells") {
  std::vector<Scenario> instances;
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    instances.push_back(generate_scenario(4, 1, Distribution::uniform, TeamConfig{}, seed));
  }
  const std::vector<MethodSpec> methods{parse_method("oracle"), heuristic("gls"), drl("drl_greedy")};
  EvalOptions opt;
  opt.timing = false;
  const auto r = evaluate_suite(methods, instances, TeamConfig{}, opt);
  REQUIRE(r.summary.size() == 3);
  CHECK(r.summary[0].gap_pct == 0.0);
  CHECK(r.summary[0].win_rate_pct == 100.0);
  CHECK(r.summary[0].failures == 0);
  for (const auto& s : r.summary) CHECK(s.mean_min >= r.summary[0].mean_min - 1e-9);
  CHECK(r.label == "1U1G");
}

TEST_CASE("a crashing method fails its cell and the run continues") {
  std::vector<Scenario> instances{generate_scenario(3, 1, Distribution::uniform, TeamConfig{}, 2),
                                  generate_scenario(9, 2, Distribution::uniform, TeamConfig{}, 2)};
  EvalOptions opt;
  opt.timing = false;
  const auto r = evaluate_suite({parse_method("oracle"), heuristic("gls")}, instances, TeamConfig{}, opt);
  CHECK(!r.cells[0][0].failed);
  CHECK(r.cells[0][1].failed);
  CHECK(r.cells[0][1].objective_s == MissionOptions{}.penalty_s);
  CHECK(r.cells[0][1].error.find("oracle limit") != std::string::npos);
  CHECK(!r.cells[1][1].failed);
  CHECK(r.summary[0].failures == 1);
  CHECK(r.summary[1].win_rate_pct == 100.0);
}

TEST_CASE("tampered traces are scored as failures") {
  const Scenario s = generate_scenario(5, 2, Distribution::uniform, TeamConfig{}, 4);
  RouteSolution route = run_method(heuristic("gls"), s, TeamConfig{}, 1);
  const double honest = score_route(s, route).objective_s;
  CHECK(honest == doctest::Approx(route.makespan_s).epsilon(1e-9));
  route.steps[1].clock_s -= 50.0;
  const auto cell = score_route(s, route);
  CHECK(cell.failed);
  CHECK(cell.objective_s > MissionOptions{}.penalty_s);
  route.steps.pop_back();
  route.steps.pop_back();
  CHECK(score_route(s, route).failed);
}

TEST_CASE("reports are deterministic across runs and thread counts") {
  std::vector<Scenario> instances;
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    instances.push_back(generate_scenario(6, 2, Distribution::gaussian, TeamConfig{}, seed));
  }
  const std::vector<MethodSpec> methods{heuristic("tabu", 200), drl("drl_sample8", 3), drl("drl_mf_greedy")};
  EvalOptions opt;
  opt.timing = false;
  opt.seed = 5;
  omp_set_num_threads(1);
  const auto a = evaluate_suite(methods, instances, TeamConfig{}, opt);
  omp_set_num_threads(3);
  const auto b = evaluate_suite(methods, instances, TeamConfig{}, opt);
  omp_set_num_threads(1);
  CHECK(report_json(a) == report_json(b));
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_csv(a).rfind("method,obj_mean_min,obj_std_min,obj_best_min,gap_pct,time_s,win_rate_pct,failures\n", 0) ==
        0);
  for (const auto& s : a.summary) CHECK(s.mean_time_s == 0.0);
}

TEST_CASE("comparison table has one column group per configuration") {
  EvalReport one, two;
  one.label = "1U1G";
  one.methods = {"gls", "drl_greedy"};
  one.cells = {{cell(600, 1)}, {cell(660, 1)}};
  summarize(one);
  two.label = "2U1G";
  two.methods = {"gls", "drl_mf_greedy"};
  two.cells = {{cell(500, 1)}, {cell(400, 1)}};
  summarize(two);
  const std::string csv = comparison_table_csv({one, two});
  const std::string head = csv.substr(0, csv.find('\n'));
  CHECK(head ==
        "method,1U1G:obj_min,1U1G:gap_pct,1U1G:time_s,1U1G:win_rate_pct,2U1G:obj_min,2U1G:gap_pct,2U1G:time_s,"
        "2U1G:win_rate_pct");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("drl_mf_greedy,,,,,") != std::string::npos);
  const std::string text = comparison_table_text({one, two});
  CHECK(text.find("Obj. (min.)") != std::string::npos);
  CHECK(text.find("Gap (%)") != std::string::npos);
  CHECK(text.find("Time (sec)") != std::string::npos);
}

TEST_CASE("replanning without events is the plain plan") {
  const Scenario s = generate_scenario(8, 3, Distribution::uniform, TeamConfig{}, 6);
  for (const auto& m : {drl("drl_sample8", 2), heuristic("gls")}) {
    const auto r = dynamic_replan(s, TeamConfig{}, m, {}, 7);
    CHECK(r.route == run_method(m, s, TeamConfig{}, 7));
    CHECK(r.segments.size() == 1);
  }
}

TEST_CASE("event validation") {
  ReplanEvent a, b;
  a.trigger_value = 2;
  b.trigger_value = 2;
  CHECK_THROWS_AS(validate_events({a, b}), Error);
  b.trigger = TriggerKind::mission_time;
  b.trigger_value = 5000;
  CHECK_THROWS_AS(validate_events({a, b}), Error);
  a.trigger_value = 1.5;
  CHECK_THROWS_AS(validate_events({a}), Error);
  const Scenario s = generate_scenario(4, 1, Distribution::uniform, TeamConfig{}, 6);
  ReplanEvent ok;
  ok.set_team = TeamConfig{2, 1};
  CHECK_THROWS_AS(dynamic_replan(s, TeamConfig{}, heuristic("gls"), {ok}, 1), Error);
}

TEST_CASE("injected points are covered after the first recharge") {
  const TeamConfig team{2, 1};
  Scenario s = generate_scenario(40, 10, Distribution::uniform, team, 8);
  const auto injected = hold_out(s, 5);
  REQUIRE(s.tasks.size() == 45);
  ReplanEvent ev;
  ev.trigger_value = 1;
  ev.add_tasks = injected;
  const auto r = dynamic_replan(s, team, drl("drl_sample16", 4), {ev}, 3);
  REQUIRE(r.events[0].fired);
  CHECK(r.events[0].feasible);
  CHECK(r.segments.size() == 2);
  const auto rep = replay(s, r.route, r.route.selection);
  CHECK(rep.legal);
  CHECK(rep.status == Status::success);
  CHECK(rep.num_tasks == 50);
  CHECK(rep.visited == 50);
  CHECK(rep.makespan_s == doctest::Approx(r.route.makespan_s).epsilon(1e-12));
  // Nothing visited before the switch is visited again, clocks never rewind.
  std::vector<int> seen(50, 0);
  for (const auto& st : r.route.steps) {
    if (st.action.kind == ActionKind::visit) CHECK(seen[static_cast<std::size_t>(task_of_node(st.action.node))]++ == 0);
  }
}

TEST_CASE("team expansion and reduction mid-mission") {
  const TeamConfig team{2, 1};
  const Scenario s = generate_scenario(20, 5, Distribution::uniform, team, 9);
  for (const TeamConfig next : {TeamConfig{4, 2}, TeamConfig{1, 1}}) {
    ReplanEvent ev;
    ev.trigger_value = 2;
    ev.set_team = next;
    const auto r = dynamic_replan(s, team, drl("drl_sample16", 4), {ev}, 3);
    REQUIRE(r.events[0].fired);
    CHECK(r.events[0].feasible);
    const auto rep = replay(s, r.route, r.route.selection);
    CHECK(rep.legal);
    CHECK(rep.status == Status::success);
    CHECK(rep.visited == rep.num_tasks);
    const double t = r.events[0].switch_time_s;
    const int first = r.events[0].before_step;
    if (next.num_uavs > team.num_uavs) {
      CHECK(rep.final_state.uavs.size() == 4);
      // New UAVs leave the depot with a full tank at the switch time.
      const auto mission = make_mission(s, next);
      for (int u = 2; u < 4; ++u) {
        const auto it = std::find_if(r.route.steps.begin() + first, r.route.steps.end(),
                                     [&](const TraceStep& st) { return st.agent == AgentRef{AgentKind::uav, u}; });
        REQUIRE(it != r.route.steps.end());
        const int node = it->action.node;
        CHECK(it->reward_s == doctest::Approx(mission->flight_time(kDepotNode, node)).epsilon(1e-12));
        CHECK(it->clock_s == doctest::Approx(t + it->reward_s).epsilon(1e-12));
        CHECK(it->fuel_kj ==
              doctest::Approx(s.fuel.capacity_kj - mission->flight_fuel(kDepotNode, node)).epsilon(1e-12));
      }
    } else {
      // The retiring UAV finishes at most the sortie it was flying.
      bool landed = false;
      for (std::size_t k = static_cast<std::size_t>(first); k < r.route.steps.size(); ++k) {
        const auto& st = r.route.steps[k];
        if (st.agent != AgentRef{AgentKind::uav, 1}) continue;
        CHECK(!landed);
        landed = st.action.kind == ActionKind::recharge;
      }
      CHECK(rep.final_state.uavs[1].retired);
    }
  }
}
