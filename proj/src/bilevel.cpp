#include "coroute/bilevel.hpp"

#include <algorithm>
#include <limits>

#include "coroute/error.hpp"
#include "coroute/rng.hpp"
#include "coroute/tsp.hpp"
#include "json.hpp"

namespace coroute {

std::vector<Subproblem> split_subproblems(const Mission& mission, const RefuelPlan& ordered) {
  require(!ordered.stops.empty() && ordered.stops.front() == kDepotNode, ErrorKind::invalid_argument,
          "the stop sequence must start at the depot");
  std::vector<Subproblem> subs;
  double clock = 0.0;
  for (std::size_t k = 0; k < ordered.stops.size(); ++k) {
    Subproblem s;
    s.index = static_cast<int>(k);
    s.dest_stop = ordered.stops[k];
    s.source_stop = k == 0 ? ordered.stops[0] : ordered.stops[k - 1];
    clock += mission.road_time(s.source_stop, s.dest_stop);
    s.t_r_s = clock;
    subs.push_back(s);
  }
  for (const auto& [task, stop] : ordered.cover) {
    const auto it = std::find(ordered.stops.begin(), ordered.stops.end(), stop);
    require(it != ordered.stops.end(), ErrorKind::invalid_argument,
            "task " + std::to_string(task) + " is allocated to a stop outside the sequence");
    subs[static_cast<std::size_t>(it - ordered.stops.begin())].tasks.push_back(task);
  }
  return subs;
}

std::vector<int> insert_relay_stops(const Mission& mission, const std::vector<int>& ordered) {
  const double cap = mission.scenario().fuel.capacity_kj - 1e-9;
  std::vector<int> out;
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    if (k > 0) {
      int a = out.back();
      const int b = ordered[k];
      while (mission.flight_fuel(a, b) > cap) {
        const Point target = mission.node_point(b);
        const double here = distance(mission.node_point(a), target);
        int best = -1;
        double best_d = here - 1e-6;
        for (int g : mission.ground_nodes()) {
          if (mission.flight_fuel(a, g) > cap) continue;
          const double d = distance(mission.node_point(g), target);
          if (d < best_d) {
            best_d = d;
            best = g;
          }
        }
        require(best >= 0, ErrorKind::infeasible,
                "no ground point relays the UAVs from node " + std::to_string(a) + " to node " +
                    std::to_string(b));
        out.push_back(best);
        a = best;
      }
    }
    out.push_back(ordered[k]);
  }
  return out;
}

namespace {

/// Drives a scripted mission from E-VRPTW sorties.
class Stitcher {
 public:
  Stitcher(MissionPtr mission, HeuristicSolution& sol, RouteSolution& route)
      : state_(reset(mission)), sol_(sol), route_(route) {
    sol_.ugv_routes.assign(state_.ugvs.size(), {});
    for (const auto& g : state_.ugvs) sol_.ugv_routes[g.index].push_back({g.node, 0.0, 0.0});
  }

  const MissionState& state() const { return state_; }

  /// Flies the sorties (task nodes per sortie, per UAV) ending at `dest`
  /// and services every landing in landing order.
  void run(const std::vector<std::vector<std::vector<int>>>& sorties, int dest) {
    std::vector<std::size_t> next(sorties.size(), 0);
    auto fly_next = [&](int u) {
      if (state_.status != Status::running) return;
      if (next[u] >= sorties[u].size()) return;
      const AgentRef who{AgentKind::uav, u};
      if (!can_act(state_, who)) return;
      const auto& sortie = sorties[u][next[u]++];
      for (int node : sortie) {
        set_active(state_, who);
        route_.steps.push_back(record_step(state_, Action::visit(node)));
      }
      if (state_.status != Status::running) return;
      set_active(state_, who);
      route_.steps.push_back(record_step(state_, Action::recharge(dest)));
    };

    std::vector<int> order(sorties.size());
    for (std::size_t u = 0; u < order.size(); ++u) order[u] = static_cast<int>(u);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return state_.uavs[a].clock_s < state_.uavs[b].clock_s;
    });
    for (int u : order) fly_next(u);

    while (state_.status == Status::running) {
      int uav = -1;
      for (const auto& u : state_.uavs) {
        if (!u.landed_at) continue;
        if (uav < 0 || u.landed_at->time_s < state_.uavs[uav].landed_at->time_s) uav = u.index;
      }
      if (uav < 0) break;
      const Landing land = *state_.uavs[uav].landed_at;
      const Mission& m = *state_.mission;
      int ugv = -1;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& g : state_.ugvs) {
        if (g.retired) continue;
        const double start =
            std::max({land.time_s, g.clock_s + m.road_time(g.node, land.node), g.busy_until_s});
        if (start < best) {
          best = start;
          ugv = g.index;
        }
      }
      const AgentState before = state_.ugvs[ugv];
      set_active(state_, {AgentKind::ugv, ugv});
      route_.steps.push_back(record_step(state_, Action::recharge(land.node)));
      const AgentState& after = state_.ugvs[ugv];
      const double end = after.clock_s;
      sol_.rendezvous.push_back({uav, ugv, land.node, land.time_s, end - m.team().recharge_time_s, end});
      sol_.ugv_routes[ugv].push_back(
          {land.node, before.clock_s + m.road_time(before.node, land.node), end});
      fly_next(uav);
    }
  }

 private:
  MissionState state_;
  HeuristicSolution& sol_;
  RouteSolution& route_;
};

}  // namespace

BilevelResult solve_bilevel(const Scenario& scenario, const TeamConfig& team, SearchMethod method,
                            SearchBudget budget, std::uint64_t seed, const SearchParams& params) {
  MissionOptions options;
  options.selection = SelectionMode::scripted;
  options.horizon = 1 << 28;
  const MissionPtr mission = make_mission(scenario, team, options);
  const Mission& m = *mission;

  BilevelResult out;
  HeuristicSolution& sol = out.heuristic;
  RouteSolution& route = out.route;
  route.team = team;
  route.selection = SelectionMode::scripted;
  route.horizon = options.horizon;

  RefuelPlan plan = solve_msc(m.scenario(), coverage_radius_m(m.scenario().fuel, team.v_a), {kDepotNode});
  plan.stops = insert_relay_stops(m, solve_tsp_stops(m, plan.stops));
  sol.plan = plan;
  const auto subs = split_subproblems(m, plan);

  Stitcher stitch(mission, sol, route);
  for (const auto& sub : subs) {
    if (stitch.state().status != Status::running) break;
    const MissionState& st = stitch.state();
    std::vector<int> task_nodes;
    for (int t : sub.tasks) {
      if (!st.visited[t]) task_nodes.push_back(node_of_task(t));
    }
    std::vector<double> starts;
    for (const auto& u : st.uavs) starts.push_back(u.clock_s);
    double window = std::numeric_limits<double>::infinity();
    for (const auto& g : st.ugvs) window = std::min(window, g.clock_s + m.road_time(g.node, sub.dest_stop));

    SubproblemReport rep;
    rep.sub = sub;
    rep.seed = Rng::mix(seed, static_cast<std::uint64_t>(sub.index));
    rep.model = build_evrptw_model(m, sub.source_stop, sub.dest_stop, task_nodes, team.num_uavs, starts,
                                   window);
    rep.result = solve_evrptw(rep.model, method, budget, rep.seed, params);
    rep.violations = validate_evrptw(rep.model, rep.result.solution);

    std::vector<std::vector<std::vector<int>>> sorties(static_cast<std::size_t>(team.num_uavs));
    for (int k = 0; k < team.num_uavs; ++k) {
      std::vector<int> current;
      const auto& r = rep.result.solution.routes[k];
      for (std::size_t i = 1; i < r.size(); ++i) {
        if (rep.model.is_copy(r[i])) {
          sorties[k].push_back(current);
          current.clear();
        } else {
          current.push_back(rep.model.node[r[i]]);
        }
      }
      // An empty hop from the stop to itself is not a sortie.
      std::erase_if(sorties[k], [&](const std::vector<int>& s) {
        return s.empty() && sub.source_stop == sub.dest_stop;
      });
    }
    sol.subproblems.push_back(std::move(rep));
    stitch.run(sorties, sub.dest_stop);
  }

  finalize(route, stitch.state());
  sol.makespan_s = route.makespan_s;
  return out;
}

std::string solver_report_json(const HeuristicSolution& sol, SearchMethod method, SearchBudget budget,
                               std::uint64_t seed) {
  using nlohmann::json;
  const json budget_json = {{"iterations", budget.iterations}, {"wall_ms", budget.wall_ms}};
  json subs = json::array();
  for (const auto& rep : sol.subproblems) {
    json violations = json::array();
    for (const auto& v : rep.violations) {
      violations.push_back({{"constraint", to_string(v.constraint)}, {"vertex", v.vertex}, {"detail", v.detail}});
    }
    json routes = json::array();
    for (const auto& r : rep.result.solution.routes) {
      json nodes = json::array();
      for (int v : r) nodes.push_back(rep.model.node[v]);
      routes.push_back(nodes);
    }
    subs.push_back({{"index", rep.sub.index},
                    {"source", rep.sub.source_stop},
                    {"dest", rep.sub.dest_stop},
                    {"tasks", rep.sub.tasks},
                    {"t_r_s", rep.model.window_s},
                    {"method", to_string(method)},
                    {"seed", rep.seed},
                    {"budget", budget_json},
                    {"objective_s", rep.result.solution.objective_s},
                    {"construction_objective_s", rep.result.construction_objective_s},
                    {"iterations", rep.result.iterations},
                    {"routes", routes},
                    {"violations", violations}});
  }
  json rendezvous = json::array();
  for (const auto& r : sol.rendezvous) {
    rendezvous.push_back({{"uav", r.uav}, {"ugv", r.ugv}, {"node", r.node}, {"landing_s", r.landing_s},
                          {"start_s", r.start_s}, {"end_s", r.end_s}});
  }
  json doc = {{"method", to_string(method)},
              {"seed", seed},
              {"budget", budget_json},
              {"stops", sol.plan.stops},
              {"makespan_s", sol.makespan_s},
              {"subproblems", subs},
              {"rendezvous", rendezvous}};
  return doc.dump(1);
}

}  // namespace coroute
