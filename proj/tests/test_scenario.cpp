#include <cmath>
#include <numeric>

#include "coroute/error.hpp"
#include "coroute/rng.hpp"
#include "coroute/scenario.hpp"
#include "coroute/scenario_io.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace coroute;

// Reference values from tests/oracles/frozen_values.py (40-digit arithmetic).
constexpr double kPower10 = 198.599;
constexpr double kEndurance10 = 1448.647777682667;
constexpr double kCoverageRadius = 7243.238888413335;
constexpr double kTwoRoadEdges = 222.2222222222222;

TEST_CASE("power polynomial at cruise speed") {
  const FuelModel model;
  const auto r = power_and_fuel(10.0, 0.0, model);
  CHECK(r.power_w == doctest::Approx(kPower10).epsilon(1e-12));
  CHECK(r.endurance_s == doctest::Approx(kEndurance10).epsilon(1e-12));
  CHECK(r.endurance_s / 60.0 == doctest::Approx(24.14).epsilon(1e-3));
  CHECK(model.power_w(0.0) == 229.6);
}

TEST_CASE("fuel cost is power times flight time") {
  const FuelModel model;
  const auto r = power_and_fuel(10.0, 6000.0, model);
  CHECK(r.fuel_cost_kj == doctest::Approx(kPower10 * 600.0 / 1000.0).epsilon(1e-12));
}

TEST_CASE("non-positive speed is rejected") {
  const FuelModel model;
  for (double v : {0.0, -1.0}) {
    try {
      power_and_fuel(v, 10.0, model);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_speed);
    }
  }
}

TEST_CASE("power stays positive across the speed envelope") {
  const FuelModel model;
  for (int i = 10; i <= 200; ++i) CHECK(model.power_w(i / 10.0) > 0.0);
}

TEST_CASE("fuel cost is additive over path pieces") {
  const FuelModel model;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double d1 = rng.uniform(0.0, 20000.0);
    const double d2 = rng.uniform(0.0, 20000.0);
    const double v = rng.uniform(1.0, 20.0);
    const double split = power_and_fuel(v, d1, model).fuel_cost_kj + power_and_fuel(v, d2, model).fuel_cost_kj;
    const double whole = power_and_fuel(v, d1 + d2, model).fuel_cost_kj;
    CHECK(std::abs(split - whole) <= 1e-9 * whole);
  }
}

TEST_CASE("coverage radius exceeds the sampling radius") {
  const double r = coverage_radius_m(FuelModel{}, 10.0);
  CHECK(r == doctest::Approx(kCoverageRadius).epsilon(1e-12));
  CHECK(r >= 7000.0);
}

TEST_CASE("travel time in both modes") {
  CHECK(travel_time({0, 0}, {600, 0}, 10.0, TravelMode::euclidean) == 60.0);
  CHECK(travel_time({3, 4}, {3, 4}, 10.0, TravelMode::euclidean) == 0.0);

  RoadNetwork road;
  road.nodes = {{0, 0}, {500, 0}, {500, 500}, {0, 900}};
  road.edges = {{0, 1, 500.0}, {1, 2, 500.0}};
  CHECK(travel_time({0, 0}, {500, 500}, 4.5, TravelMode::road, &road) ==
        doctest::Approx(kTwoRoadEdges).epsilon(1e-12));
  CHECK_THROWS_AS(travel_time({0, 0}, {0, 900}, 4.5, TravelMode::road, &road), Error);
  try {
    travel_time({0, 0}, {0, 900}, 4.5, TravelMode::road, &road);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::disconnected_network);
  }
}

TEST_CASE("generated instance sizes") {
  const auto s = generate_scenario(15, 5, Distribution::uniform, TeamConfig{}, 1);
  CHECK(s.tasks.size() == 20);
  CHECK(s.num_aerial() == 15);
  CHECK(s.num_ground() == 5);
  s.validate();
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate_scenario(15, 5, Distribution::uniform, TeamConfig{}, 1);
  const auto b = generate_scenario(15, 5, Distribution::uniform, TeamConfig{}, 1);
  CHECK(scenario_to_json(a) == scenario_to_json(b));
  const auto c = generate_scenario(15, 5, Distribution::uniform, TeamConfig{}, 2);
  CHECK(scenario_to_json(a) != scenario_to_json(c));
}

TEST_CASE("gaussian sampler is centred on the area midpoint") {
  GenerationParams params;
  Rng rng(7);
  double sx = 0.0, sy = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const Point p = sample_aerial_point(Distribution::gaussian, {}, params, rng);
    sx += p.x;
    sy += p.y;
  }
  CHECK(std::hypot(sx / n - 10000.0, sy / n - 10000.0) < 1000.0);

  const auto s = generate_scenario(45, 15, Distribution::gaussian, TeamConfig{}, 7);
  CHECK(s.num_aerial() == 45);
}

TEST_CASE("rayleigh sampler leaves the centre sparse") {
  GenerationParams params;
  Rng rng(11);
  int inner = 0;
  const int n = 4000;
  double mean_r = 0.0;
  for (int i = 0; i < n; ++i) {
    const Point p = sample_aerial_point(Distribution::rayleigh, {}, params, rng);
    const double r = std::hypot(p.x - 10000.0, p.y - 10000.0);
    mean_r += r / n;
    if (r < 1000.0) ++inner;
  }
  // Rayleigh mean is sigma * sqrt(pi / 2); P(r < 1 km) = 1 - exp(-0.02).
  CHECK(mean_r == doctest::Approx(5000.0 * std::sqrt(std::acos(-1.0) / 2.0)).epsilon(0.05));
  CHECK(inner < 0.04 * n);
}

TEST_CASE("every aerial point lies within 7 km of a road node") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (auto dist : {Distribution::uniform, Distribution::gaussian, Distribution::rayleigh}) {
      const auto s = generate_scenario(15, 5, dist, TeamConfig{}, seed);
      for (const auto& t : s.tasks) {
        const double d = distance(t.pos(), s.road.nodes[s.road.nearest_node(t.pos())]);
        REQUIRE(d <= 7000.0);
        const bool inside = t.x >= 0 && t.y >= 0 && t.x <= s.area_side_m && t.y <= s.area_side_m;
        REQUIRE(inside);
      }
    }
  }
}

TEST_CASE("impossible placement reports a generation failure") {
  GenerationParams params;
  params.sampling_radius_m = 1.0;
  params.max_attempts = 50;
  try {
    generate_scenario(3, 1, Distribution::gaussian, TeamConfig{}, 3, params);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::generation_failure);
  }
}

TEST_CASE("generated road network is connected and straight-edged") {
  const auto road = RoadNetwork::grid_plus_ring(20000.0);
  CHECK(road.connected());
  for (const auto& e : road.edges) {
    CHECK(e.length_m + 1e-9 >= distance(road.nodes[e.a], road.nodes[e.b]));
  }
}

TEST_CASE("scenario JSON round trip") {
  const auto s = generate_scenario(8, 3, Distribution::rayleigh, TeamConfig{2, 1, 10.0, 4.5, 300.0}, 42);
  const auto back = scenario_from_json(scenario_to_json(s));
  CHECK(back == s);
  CHECK(scenario_to_json(back) == scenario_to_json(s));
}

TEST_CASE("unknown scenario version is refused") {
  auto text = scenario_to_json(generate_scenario(2, 1, Distribution::uniform, TeamConfig{}, 1));
  const auto pos = text.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 12, "\"version\": 2");
  try {
    scenario_from_json(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::version_mismatch);
  }
}

TEST_CASE("scenario validation catches broken invariants") {
  auto s = testing::line_scenario(3, 500.0, 0);
  testing::add_task(s, 2500.0, 12000.0, TaskKind::ground);
  CHECK_THROWS_AS(s.validate(), Error);
  s.tasks[0].y = 10000.0;
  s.tasks[0].x = 2500.0;
  s.validate();
  s.tasks[0].id = 4;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("team validation") {
  CHECK_THROWS_AS((TeamConfig{0, 1, 10.0, 4.5, 300.0}.validate()), Error);
  CHECK_THROWS_AS((TeamConfig{1, 1, 4.0, 4.5, 300.0}.validate()), Error);
  CHECK_THROWS_AS((TeamConfig{1, 1, 10.0, 4.5, -1.0}.validate()), Error);
  TeamConfig{}.validate();
}
