#pragma once

#include "coroute/scenario.hpp"

namespace coroute::testing {

/// A straight east-west road through the middle of the area with nodes every
/// `pitch_m`; the depot sits at `depot`.
inline RoadNetwork line_road(int nodes, double pitch_m, double y = 10000.0, double x0 = 2000.0) {
  RoadNetwork r;
  for (int i = 0; i < nodes; ++i) r.nodes.push_back({x0 + i * pitch_m, y});
  for (int i = 0; i + 1 < nodes; ++i) r.edges.push_back({i, i + 1, pitch_m});
  return r;
}

inline Scenario line_scenario(int nodes, double pitch_m, int depot) {
  Scenario s;
  s.road = line_road(nodes, pitch_m);
  s.depot = depot;
  return s;
}

inline void add_task(Scenario& s, double x, double y, TaskKind kind) {
  s.tasks.push_back({static_cast<int>(s.tasks.size()), x, y, kind});
}

}  // namespace coroute::testing
