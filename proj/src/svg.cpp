#include "coroute/svg.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "coroute/error.hpp"

namespace coroute {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Point to_viewport(Point p, double side, const PlotSpec& spec) {
  const double m = spec.margin_px;
  return {m + p.x / side * (spec.width_px - 2 * m), m + (1.0 - p.y / side) * (spec.height_px - 2 * m)};
}

std::string export_svg(const RouteSolution& trace, const Scenario& scenario, const PlotSpec& spec) {
  const ReplayReport rep = replay(scenario, trace, trace.selection);
  if (!rep.legal) {
    std::string msg = "trace does not replay:";
    for (const auto& v : rep.violations) msg += "\n  " + v;
    fail(ErrorKind::infeasible, msg);
  }
  const Mission& mission = *rep.final_state.mission;
  const Scenario& final_scenario = mission.scenario();
  const double side = scenario.area_side_m;
  auto px = [&](Point p) { return to_viewport(p, side, spec); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(spec.width_px)
     << "\" height=\"" << num(spec.height_px) << "\" viewBox=\"0 0 " << num(spec.width_px) << " "
     << num(spec.height_px) << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << num(spec.width_px) << "\" height=\"" << num(spec.height_px)
     << "\" fill=\"white\"/>\n";

  if (spec.show_road) {
    os << "<g class=\"road\" stroke=\"" << escape(spec.road_color) << "\" stroke-width=\"1\">\n";
    for (const auto& e : scenario.road.edges) {
      const Point a = px(scenario.road.nodes[static_cast<std::size_t>(e.a)]);
      const Point b = px(scenario.road.nodes[static_cast<std::size_t>(e.b)]);
      os << "<line x1=\"" << num(a.x) << "\" y1=\"" << num(a.y) << "\" x2=\"" << num(b.x) << "\" y2=\"" << num(b.y)
         << "\"/>\n";
    }
    os << "</g>\n";
  }

  // Agent paths, in trace order; agents that join later start at the depot.
  std::map<std::pair<int, int>, std::vector<Point>> paths;
  std::vector<Point> rendezvous;
  for (const auto& st : trace.steps) {
    auto& path = paths[{static_cast<int>(st.agent.kind), st.agent.index}];
    if (path.empty()) path.push_back(mission.node_point(kDepotNode));
    const Point p = mission.node_point(st.action.node);
    path.push_back(p);
    if (st.agent.kind == AgentKind::ugv) rendezvous.push_back(p);
  }
  for (const auto& [key, path] : paths) {
    const bool uav = key.first == static_cast<int>(AgentKind::uav);
    os << "<polyline class=\"agent " << (uav ? "uav" : "ugv") << "\" id=\"" << (uav ? "uav" : "ugv") << key.second
       << "\" fill=\"none\" stroke=\"" << escape(uav ? spec.uav_color : spec.ugv_color)
       << "\" stroke-width=\"" << (uav ? "1.5" : "2.5") << "\"" << (uav ? " stroke-dasharray=\"6 4\"" : "")
       << " points=\"";
    for (std::size_t i = 0; i < path.size(); ++i) {
      const Point q = px(path[i]);
      os << (i ? " " : "") << num(q.x) << "," << num(q.y);
    }
    os << "\"/>\n";
  }

  for (const auto& t : final_scenario.tasks) {
    const bool visited = rep.final_state.visited[static_cast<std::size_t>(t.id)] != 0;
    const Point q = px(t.pos());
    const std::string cls = std::string("task ") + (t.kind == TaskKind::ground ? "ground" : "aerial") +
                            (visited ? " visited" : " unvisited");
    const std::string opacity = visited ? num(spec.visited_opacity) : "1.00";
    if (t.kind == TaskKind::ground) {
      os << "<rect class=\"" << cls << "\" x=\"" << num(q.x - 4) << "\" y=\"" << num(q.y - 4)
         << "\" width=\"8\" height=\"8\" fill=\"#2ca02c\" fill-opacity=\"" << opacity << "\"/>\n";
    } else {
      os << "<circle class=\"" << cls << "\" cx=\"" << num(q.x) << "\" cy=\"" << num(q.y)
         << "\" r=\"4\" fill=\"#ff7f0e\" fill-opacity=\"" << opacity << "\"/>\n";
    }
  }
  for (const Point p : rendezvous) {
    const Point q = px(p);
    os << "<circle class=\"rendezvous\" cx=\"" << num(q.x) << "\" cy=\"" << num(q.y)
       << "\" r=\"7\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }
  const Point d = px(scenario.depot_point());
  os << "<path class=\"depot\" d=\"M " << num(d.x) << " " << num(d.y - 8) << " L " << num(d.x + 7) << " "
     << num(d.y + 6) << " L " << num(d.x - 7) << " " << num(d.y + 6) << " Z\" fill=\"black\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace coroute
