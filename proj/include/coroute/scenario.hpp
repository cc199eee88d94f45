#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace coroute {

class Rng;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

enum class TaskKind { aerial, ground };

struct TaskPoint {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  TaskKind kind = TaskKind::aerial;

  Point pos() const { return {x, y}; }
  bool operator==(const TaskPoint&) const = default;
};

struct RoadEdge {
  int a = 0;
  int b = 0;
  double length_m = 0.0;
  bool operator==(const RoadEdge&) const = default;
};

/// Undirected road graph. Edge lengths are at least the Euclidean distance
/// between their endpoints.
struct RoadNetwork {
  std::vector<Point> nodes;
  std::vector<RoadEdge> edges;

  /// Dijkstra from one node; unreachable entries are +inf.
  std::vector<double> shortest_paths_from(int source) const;
  /// Throws disconnected_network when b is unreachable from a.
  double shortest_path(int a, int b) const;
  std::optional<int> node_at(Point p, double tolerance_m = 1e-6) const;
  int nearest_node(Point p) const;
  bool connected() const;

  /// The fixed network used for generated instances: an 11 x 11 street grid
  /// at 2 km pitch plus a 24-node ring road of radius 6 km around the
  /// midpoint, each ring node linked to its nearest grid node.
  static RoadNetwork grid_plus_ring(double area_side_m);

  bool operator==(const RoadNetwork&) const = default;
};

/// Cubic UAV power profile P(v) = c3 v^3 + c2 v^2 + c1 v + c0 in watts.
struct FuelModel {
  double c3 = 0.0461;
  double c2 = -0.5834;
  double c1 = -1.8761;
  double c0 = 229.6;
  double capacity_kj = 287.7;

  double power_w(double v) const { return ((c3 * v + c2) * v + c1) * v + c0; }
  void validate() const;
  bool operator==(const FuelModel&) const = default;
};

struct FuelReport {
  double power_w = 0.0;
  double fuel_cost_kj = 0.0;
  double endurance_s = 0.0;
};

/// Power draw, energy for `distance_m` at constant speed, and endurance on a
/// full tank. Throws invalid_speed for v <= 0.
FuelReport power_and_fuel(double v, double distance_m, const FuelModel& model);

struct TeamConfig {
  int num_uavs = 1;
  int num_ugvs = 1;
  double v_a = 10.0;
  double v_g = 4.5;
  /// Not given by the source model; 5 minutes is our default.
  double recharge_time_s = 300.0;

  void validate() const;
  bool operator==(const TeamConfig&) const = default;
};

enum class TravelMode { euclidean, road };

/// Euclidean mode ignores `road`. Road mode maps both points to network
/// nodes by exact coordinates and uses the shortest path.
double travel_time(Point a, Point b, double speed, TravelMode mode,
                   const RoadNetwork* road = nullptr);

enum class Distribution { uniform, gaussian, rayleigh };

std::string_view to_string(Distribution d);
Distribution parse_distribution(std::string_view name);

struct Scenario {
  static constexpr int kVersion = 1;

  double area_side_m = 20000.0;
  int depot = 0;  ///< road node index
  std::vector<TaskPoint> tasks;
  RoadNetwork road;
  FuelModel fuel;
  TeamConfig team;
  std::uint64_t seed = 0;

  Point depot_point() const { return road.nodes.at(static_cast<std::size_t>(depot)); }
  int num_ground() const;
  int num_aerial() const;
  /// Checks the structural invariants (ids, area bounds, ground points on
  /// road nodes, connectivity). Throws invalid_argument.
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

/// Sampling constants for generated instances.
struct GenerationParams {
  double area_side_m = 20000.0;
  double sampling_radius_m = 7000.0;
  double gaussian_sigma_m = 3000.0;
  double rayleigh_sigma_m = 5000.0;
  int max_attempts = 100000;
};

/// UAV coverage radius: half the distance flown on a full tank at v_a.
double coverage_radius_m(const FuelModel& fuel, double v_a);

/// One raw draw from the aerial-point sampler (before the coverage
/// rejection). Exposed so the sampler's moments can be tested directly.
Point sample_aerial_point(Distribution dist, const std::vector<Point>& anchors,
                          const GenerationParams& params, Rng& rng);

Scenario generate_scenario(int n_aerial, int n_ground, Distribution dist,
                           const TeamConfig& team, std::uint64_t seed,
                           const GenerationParams& params = {});

}  // namespace coroute
