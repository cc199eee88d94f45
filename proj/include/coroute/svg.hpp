#pragma once

#include <string>

#include "coroute/trace.hpp"

namespace coroute {

struct PlotSpec {
  double width_px = 800.0;
  double height_px = 800.0;
  double margin_px = 24.0;
  std::string uav_color = "#d62728";  ///< dashed
  std::string ugv_color = "#1f77b4";  ///< solid
  std::string road_color = "#c8c8c8";
  double visited_opacity = 0.35;
  bool show_road = true;
};

/// Area coordinates (metres, origin bottom-left, side L) map to the
/// viewport as x_px = m + x / L * (W - 2m), y_px = m + (1 - y / L) * (H - 2m).
Point to_viewport(Point p, double area_side_m, const PlotSpec& spec);

/// SVG 1.1 document: road edges, depot, one task marker per point (visited
/// ones faded), one polyline per agent that moved (UAV dashed, UGV solid)
/// and a black circle at every rendezvous. The trace is replayed first;
/// an illegal trace is refused with the replay violations (infeasible).
std::string export_svg(const RouteSolution& trace, const Scenario& scenario, const PlotSpec& spec = {});

}  // namespace coroute
