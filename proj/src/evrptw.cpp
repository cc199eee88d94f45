#include "coroute/evrptw.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coroute/env.hpp"
#include "coroute/error.hpp"

namespace coroute {

EvrptwModel build_evrptw_model(const Mission& mission, int source_node, int dest_node,
                               const std::vector<int>& task_nodes, int fleet,
                               const std::vector<double>& start_s, double window_s, int copies) {
  require(fleet >= 1, ErrorKind::invalid_argument, "fleet must be positive");
  require(static_cast<int>(start_s.size()) == fleet, ErrorKind::invalid_argument,
          "one start time per UAV is required");
  require(mission.is_ground(source_node) && mission.is_ground(dest_node), ErrorKind::invalid_argument,
          "source and destination must be ground points");
  EvrptwModel m;
  m.num_tasks = static_cast<int>(task_nodes.size());
  m.num_copies = copies > 0 ? copies : fleet + m.num_tasks;
  m.fleet = fleet;
  m.capacity_kj = mission.scenario().fuel.capacity_kj;
  m.recharge_time_s = mission.team().recharge_time_s;
  m.window_s = window_s;
  m.start_s = start_s;
  m.node.push_back(source_node);
  for (int t : task_nodes) {
    require(t > 0 && t < mission.num_nodes(), ErrorKind::invalid_argument, "bad task node");
    m.node.push_back(t);
  }
  for (int c = 0; c < m.num_copies; ++c) m.node.push_back(dest_node);

  const int n = m.num_vertices();
  m.arc_time.resize(static_cast<std::size_t>(n) * n);
  m.arc_fuel.resize(static_cast<std::size_t>(n) * n);
  double sum = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      m.arc_time[a * n + b] = mission.flight_time(m.node[a], m.node[b]);
      m.arc_fuel[a * n + b] = mission.flight_fuel(m.node[a], m.node[b]);
      sum += m.arc_time[a * n + b];
    }
  }
  const double mean_leg = n > 1 ? sum / (static_cast<double>(n) * (n - 1)) : 0.0;
  m.big_fuel_kj = m.capacity_kj;
  const double latest_start = *std::max_element(start_s.begin(), start_s.end());
  m.big_time_s = std::max(window_s, latest_start) +
                 4.0 * std::max(1, m.num_tasks) * (mean_leg + m.recharge_time_s);
  return m;
}

double evrptw_objective(const EvrptwModel& model, const std::vector<std::vector<int>>& routes) {
  double total = 0.0;
  for (const auto& r : routes) {
    for (std::size_t i = 1; i < r.size(); ++i) total += model.time(r[i - 1], r[i]);
  }
  return total;
}

EvrptwSolution schedule_routes(const EvrptwModel& model, std::vector<std::vector<int>> routes) {
  EvrptwSolution sol;
  sol.objective_s = evrptw_objective(model, routes);
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const auto& r = routes[k];
    std::vector<double> t(r.size(), 0.0);
    std::vector<double> f(r.size(), model.capacity_kj);
    if (!r.empty()) t[0] = k < model.start_s.size() ? model.start_s[k] : 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const int a = r[i - 1];
      const int b = r[i];
      const double leave = t[i - 1] + (model.is_copy(a) ? model.recharge_time_s : 0.0);
      t[i] = leave + model.time(a, b);
      if (model.is_copy(b)) {
        t[i] = std::max(t[i], model.window_s);
        f[i] = model.capacity_kj;
      } else {
        f[i] = f[i - 1] - model.fuel(a, b);
      }
    }
    sol.arrival_s.push_back(std::move(t));
    sol.fuel_kj.push_back(std::move(f));
  }
  sol.routes = std::move(routes);
  return sol;
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::visit_once: return "visit_once";
    case Constraint::full_at_stop: return "full_at_stop";
    case Constraint::fuel_bounds: return "fuel_bounds";
    case Constraint::fuel_decrease: return "fuel_decrease";
    case Constraint::time_window: return "time_window";
    case Constraint::time_propagation: return "time_propagation";
    case Constraint::flow_conservation: return "flow_conservation";
    case Constraint::route_start: return "route_start";
    case Constraint::route_end: return "route_end";
    case Constraint::arc_fuel: return "arc_fuel";
  }
  return "unknown";
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(9);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<Violation> validate_evrptw(const EvrptwModel& model, const EvrptwSolution& sol,
                                       double tol) {
  std::vector<Violation> out;
  const int n = model.num_vertices();
  if (static_cast<int>(sol.routes.size()) != model.fleet) {
    out.push_back({Constraint::route_start, -1,
                   std::to_string(sol.routes.size()) + " routes for " + std::to_string(model.fleet) +
                       " UAVs"});
  }
  std::vector<int> entered(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < sol.routes.size(); ++k) {
    const auto& r = sol.routes[k];
    const std::string who = "uav " + std::to_string(k) + ": ";
    if (r.empty() || r.front() != 0) {
      out.push_back({Constraint::route_start, r.empty() ? -1 : r.front(), who + "route does not leave S"});
      continue;
    }
    bool in_range = true;
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (r[i] <= 0 || r[i] >= n) {
        out.push_back({Constraint::flow_conservation, r[i], who + "vertex is not a task or stop copy"});
        in_range = false;
      } else {
        ++entered[r[i]];
      }
    }
    if (!in_range) continue;
    if (r.size() < 2 || !model.is_copy(r.back())) {
      out.push_back({Constraint::route_end, r.back(), who + "route does not end at a stop copy"});
    }
    const bool timed = k < sol.arrival_s.size() && sol.arrival_s[k].size() == r.size();
    const bool fueled = k < sol.fuel_kj.size() && sol.fuel_kj[k].size() == r.size();
    if (!timed) out.push_back({Constraint::time_propagation, -1, who + "missing arrival times"});
    if (!fueled) out.push_back({Constraint::fuel_bounds, -1, who + "missing fuel levels"});
    if (!timed || !fueled) continue;
    const auto& t = sol.arrival_s[k];
    const auto& f = sol.fuel_kj[k];
    const double start = k < model.start_s.size() ? model.start_s[k] : 0.0;
    if (t[0] < start - tol) {
      out.push_back({Constraint::time_propagation, 0, who + "leaves S before it is available"});
    }
    for (std::size_t i = 1; i < r.size(); ++i) {
      const int a = r[i - 1];
      const int b = r[i];
      const double on_board = model.is_task(a) ? f[i - 1] : model.capacity_kj;
      if (model.fuel(a, b) > on_board + tol) {
        out.push_back({Constraint::arc_fuel, b,
                       who + "arc needs " + fmt(model.fuel(a, b)) + " kJ with " + fmt(on_board) +
                           " kJ on board"});
      }
      if (model.is_task(b)) {
        if (f[i] < -tol || f[i] > model.capacity_kj + tol) {
          out.push_back({Constraint::fuel_bounds, b, who + "fuel " + fmt(f[i]) + " kJ out of range"});
        }
        if (f[i] > on_board - model.fuel(a, b) + tol) {
          out.push_back({Constraint::fuel_decrease, b,
                         who + "fuel " + fmt(f[i]) + " kJ exceeds " + fmt(on_board - model.fuel(a, b))});
        }
      } else if (model.is_copy(b)) {
        if (std::abs(f[i] - model.capacity_kj) > tol) {
          out.push_back({Constraint::full_at_stop, b, who + "fuel " + fmt(f[i]) + " kJ at stop copy"});
        }
        if (t[i] < model.window_s - tol) {
          out.push_back({Constraint::time_window, b,
                         who + "reaches the stop " + fmt(model.window_s - t[i]) + " s before the window"});
        }
      }
      const double earliest = t[i - 1] + (model.is_copy(a) ? model.recharge_time_s : 0.0) + model.time(a, b);
      if (t[i] < earliest - tol) {
        out.push_back({Constraint::time_propagation, b,
                       who + "arrival " + fmt(t[i]) + " s earlier than " + fmt(earliest)});
      }
    }
  }
  for (int v = 1; v < n; ++v) {
    if (model.is_task(v) && entered[v] != 1) {
      out.push_back({Constraint::visit_once, v,
                     "task entered " + std::to_string(entered[v]) + " times"});
    }
    if (model.is_copy(v) && entered[v] > 1) {
      out.push_back({Constraint::flow_conservation, v, "stop copy entered more than once"});
    }
  }
  return out;
}

std::string to_string(SearchMethod m) {
  switch (m) {
    case SearchMethod::gls: return "gls";
    case SearchMethod::tabu: return "tabu";
    case SearchMethod::anneal: return "anneal";
  }
  return "gls";
}

SearchMethod parse_search_method(const std::string& name) {
  if (name == "gls") return SearchMethod::gls;
  if (name == "tabu" || name == "ts") return SearchMethod::tabu;
  if (name == "anneal" || name == "sa") return SearchMethod::anneal;
  fail(ErrorKind::invalid_argument, "unknown search method: " + name);
}

}  // namespace coroute
