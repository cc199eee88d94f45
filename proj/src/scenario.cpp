#include "coroute/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "coroute/error.hpp"
#include "coroute/rng.hpp"

namespace coroute {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<double> RoadNetwork::shortest_paths_from(int source) const {
  const auto n = nodes.size();
  require(source >= 0 && static_cast<std::size_t>(source) < n, ErrorKind::invalid_argument,
          "road node out of range: " + std::to_string(source));
  std::vector<std::vector<std::pair<int, double>>> adjacency(n);
  for (const auto& e : edges) {
    adjacency[e.a].emplace_back(e.b, e.length_m);
    adjacency[e.b].emplace_back(e.a, e.length_m);
  }
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist[source] = 0.0;
  frontier.emplace(0.0, source);
  while (!frontier.empty()) {
    auto [d, u] = frontier.top();
    frontier.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : adjacency[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        frontier.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

double RoadNetwork::shortest_path(int a, int b) const {
  const double d = shortest_paths_from(a).at(static_cast<std::size_t>(b));
  require(std::isfinite(d), ErrorKind::disconnected_network,
          "road nodes " + std::to_string(a) + " and " + std::to_string(b) + " are not connected");
  return d;
}

std::optional<int> RoadNetwork::node_at(Point p, double tolerance_m) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (distance(nodes[i], p) <= tolerance_m) return static_cast<int>(i);
  }
  return std::nullopt;
}

int RoadNetwork::nearest_node(Point p) const {
  require(!nodes.empty(), ErrorKind::invalid_argument, "empty road network");
  int best = 0;
  double best_d = distance(nodes[0], p);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double d = distance(nodes[i], p);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

bool RoadNetwork::connected() const {
  if (nodes.empty()) return true;
  const auto dist = shortest_paths_from(0);
  return std::all_of(dist.begin(), dist.end(), [](double d) { return std::isfinite(d); });
}

RoadNetwork RoadNetwork::grid_plus_ring(double area_side_m) {
  RoadNetwork net;
  constexpr int kGrid = 11;
  constexpr int kRing = 24;
  const double pitch = area_side_m / (kGrid - 1);
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) net.nodes.push_back({c * pitch, r * pitch});
  }
  auto grid_id = [](int r, int c) { return r * kGrid + c; };
  auto link = [&net](int a, int b) {
    net.edges.push_back({a, b, distance(net.nodes[a], net.nodes[b])});
  };
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) {
      if (c + 1 < kGrid) link(grid_id(r, c), grid_id(r, c + 1));
      if (r + 1 < kGrid) link(grid_id(r, c), grid_id(r + 1, c));
    }
  }
  const Point center{area_side_m / 2.0, area_side_m / 2.0};
  const double radius = 0.3 * area_side_m;
  const int first_ring = static_cast<int>(net.nodes.size());
  for (int k = 0; k < kRing; ++k) {
    // Half-step offset keeps ring nodes off the grid lattice.
    const double angle = 2.0 * std::numbers::pi * (k + 0.5) / kRing;
    net.nodes.push_back({center.x + radius * std::cos(angle), center.y + radius * std::sin(angle)});
  }
  for (int k = 0; k < kRing; ++k) {
    const int id = first_ring + k;
    link(id, first_ring + (k + 1) % kRing);
    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < first_ring; ++g) {
      const double d = distance(net.nodes[id], net.nodes[g]);
      if (d < best) {
        best = d;
        nearest = g;
      }
    }
    link(id, nearest);
  }
  return net;
}

void FuelModel::validate() const {
  require(capacity_kj > 0.0, ErrorKind::invalid_argument, "fuel capacity must be positive");
  for (int i = 0; i <= 200; ++i) {
    const double v = 0.1 * i;
    require(power_w(v) > 0.0, ErrorKind::invalid_argument,
            "power profile must stay positive on [0, 20] m/s");
  }
}

FuelReport power_and_fuel(double v, double distance_m, const FuelModel& model) {
  require(v > 0.0, ErrorKind::invalid_speed, "speed must be positive, got " + std::to_string(v));
  require(distance_m >= 0.0, ErrorKind::invalid_argument, "distance must be non-negative");
  FuelReport r;
  r.power_w = model.power_w(v);
  r.fuel_cost_kj = r.power_w * (distance_m / v) / 1000.0;
  r.endurance_s = model.capacity_kj * 1000.0 / r.power_w;
  return r;
}

void TeamConfig::validate() const {
  require(num_uavs >= 1 && num_ugvs >= 1, ErrorKind::invalid_argument,
          "team needs at least one UAV and one UGV");
  require(v_g > 0.0 && v_a > v_g, ErrorKind::invalid_argument, "speeds must satisfy v_a > v_g > 0");
  require(recharge_time_s >= 0.0, ErrorKind::invalid_argument, "recharge time must be >= 0");
}

double travel_time(Point a, Point b, double speed, TravelMode mode, const RoadNetwork* road) {
  require(speed > 0.0, ErrorKind::invalid_speed, "speed must be positive");
  if (mode == TravelMode::euclidean) return distance(a, b) / speed;
  require(road != nullptr, ErrorKind::invalid_argument, "road mode needs a road network");
  const auto na = road->node_at(a);
  const auto nb = road->node_at(b);
  require(na && nb, ErrorKind::invalid_argument, "road mode needs both points on road nodes");
  if (*na == *nb) return 0.0;
  return road->shortest_path(*na, *nb) / speed;
}

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::uniform: return "uniform";
    case Distribution::gaussian: return "gaussian";
    case Distribution::rayleigh: return "rayleigh";
  }
  return "uniform";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "uniform") return Distribution::uniform;
  if (name == "gaussian") return Distribution::gaussian;
  if (name == "rayleigh") return Distribution::rayleigh;
  fail(ErrorKind::invalid_argument, "unknown distribution: " + std::string(name));
}

int Scenario::num_ground() const {
  return static_cast<int>(std::count_if(tasks.begin(), tasks.end(),
                                        [](const TaskPoint& t) { return t.kind == TaskKind::ground; }));
}

int Scenario::num_aerial() const { return static_cast<int>(tasks.size()) - num_ground(); }

void Scenario::validate() const {
  require(area_side_m > 0.0, ErrorKind::invalid_argument, "area side must be positive");
  require(depot >= 0 && static_cast<std::size_t>(depot) < road.nodes.size(),
          ErrorKind::invalid_argument, "depot is not a road node");
  require(road.connected(), ErrorKind::invalid_argument, "road network is not connected");
  for (const auto& e : road.edges) {
    require(e.a >= 0 && e.b >= 0 && static_cast<std::size_t>(std::max(e.a, e.b)) < road.nodes.size(),
            ErrorKind::invalid_argument, "road edge references a missing node");
    require(e.length_m + 1e-6 >= distance(road.nodes[e.a], road.nodes[e.b]),
            ErrorKind::invalid_argument, "road edge shorter than the straight line");
  }
  fuel.validate();
  team.validate();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    require(t.id == static_cast<int>(i), ErrorKind::invalid_argument, "task ids must be dense from 0");
    require(t.x >= -1e-6 && t.y >= -1e-6 && t.x <= area_side_m + 1e-6 && t.y <= area_side_m + 1e-6,
            ErrorKind::invalid_argument, "task " + std::to_string(t.id) + " lies outside the area");
    if (t.kind == TaskKind::ground) {
      require(road.node_at(t.pos()).has_value(), ErrorKind::invalid_argument,
              "ground task " + std::to_string(t.id) + " is not on a road node");
    }
  }
}

double coverage_radius_m(const FuelModel& fuel, double v_a) {
  return 0.5 * power_and_fuel(v_a, 0.0, fuel).endurance_s * v_a;
}

Point sample_aerial_point(Distribution dist, const std::vector<Point>& anchors,
                          const GenerationParams& params, Rng& rng) {
  const Point center{params.area_side_m / 2.0, params.area_side_m / 2.0};
  switch (dist) {
    case Distribution::uniform: {
      require(!anchors.empty(), ErrorKind::invalid_argument, "uniform sampling needs anchors");
      const Point a = anchors[rng.below(anchors.size())];
      const double r = params.sampling_radius_m * std::sqrt(rng.uniform());
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      return {a.x + r * std::cos(theta), a.y + r * std::sin(theta)};
    }
    case Distribution::gaussian: {
      const double dx = rng.normal() * params.gaussian_sigma_m;
      const double dy = rng.normal() * params.gaussian_sigma_m;
      return {center.x + dx, center.y + dy};
    }
    case Distribution::rayleigh: {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      const double r = params.rayleigh_sigma_m * std::sqrt(-2.0 * std::log(u));
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      return {center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
    }
  }
  return center;
}

Scenario generate_scenario(int n_aerial, int n_ground, Distribution dist, const TeamConfig& team,
                           std::uint64_t seed, const GenerationParams& params) {
  require(n_aerial >= 1 && n_ground >= 1, ErrorKind::invalid_argument,
          "need at least one aerial and one ground point");
  team.validate();
  Scenario s;
  s.area_side_m = params.area_side_m;
  s.road = RoadNetwork::grid_plus_ring(params.area_side_m);
  s.team = team;
  s.seed = seed;
  s.depot = s.road.nearest_node({params.area_side_m / 2.0, params.area_side_m / 2.0});

  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(s.road.nodes.size()); ++i) {
    if (i != s.depot) candidates.push_back(i);
  }
  require(static_cast<int>(candidates.size()) >= n_ground, ErrorKind::generation_failure,
          "road network has fewer candidate nodes than requested ground points");

  Rng rng(seed);
  // Partial Fisher-Yates: the first n_ground slots become the ground nodes.
  for (int i = 0; i < n_ground; ++i) {
    const auto j = i + static_cast<int>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  std::vector<Point> ground_points;
  for (int i = 0; i < n_ground; ++i) ground_points.push_back(s.road.nodes[candidates[i]]);
  std::vector<Point> recharge_points = ground_points;
  recharge_points.push_back(s.depot_point());

  for (int i = 0; i < n_aerial; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < params.max_attempts && !placed; ++attempt) {
      const Point p = sample_aerial_point(dist, ground_points, params, rng);
      if (p.x < 0.0 || p.y < 0.0 || p.x > params.area_side_m || p.y > params.area_side_m) continue;
      const bool covered = std::any_of(recharge_points.begin(), recharge_points.end(), [&](Point g) {
        return distance(p, g) <= params.sampling_radius_m;
      });
      if (!covered) continue;
      s.tasks.push_back({static_cast<int>(s.tasks.size()), p.x, p.y, TaskKind::aerial});
      placed = true;
    }
    require(placed, ErrorKind::generation_failure,
            "could not place aerial point " + std::to_string(i) + " within the sampling radius");
  }
  for (const Point& g : ground_points) {
    s.tasks.push_back({static_cast<int>(s.tasks.size()), g.x, g.y, TaskKind::ground});
  }
  return s;
}

}  // namespace coroute
