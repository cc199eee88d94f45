#include "coroute/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "coroute/error.hpp"

namespace coroute {

namespace {

constexpr double kTie = 1e-9;

// Discrete part of a state; two states with the same key differ only in
// clocks, fuel and step count.
using StateKey = std::tuple<std::uint64_t, int, bool, bool, int, int, int>;

struct Continuous {
  double uav_clock, uav_busy, landing, ugv_clock, ugv_busy, fuel;
  int steps;

  bool dominates(const Continuous& o) const {
    return uav_clock <= o.uav_clock + kTie && uav_busy <= o.uav_busy + kTie && landing <= o.landing + kTie &&
           ugv_clock <= o.ugv_clock + kTie && ugv_busy <= o.ugv_busy + kTie && fuel >= o.fuel - kTie &&
           steps <= o.steps;
  }
};

StateKey key_of(const MissionState& s) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < s.visited.size(); ++i) bits |= static_cast<std::uint64_t>(s.visited[i] != 0) << i;
  const auto& u = s.uavs[0];
  const auto& g = s.ugvs[0];
  const int active = s.active ? static_cast<int>(s.active->kind) : -1;
  return {bits, u.node, u.landed_at.has_value(), u.sortie_visits > 0, g.node, static_cast<int>(s.phase), active};
}

Continuous continuous_of(const MissionState& s) {
  const auto& u = s.uavs[0];
  const auto& g = s.ugvs[0];
  return {u.clock_s,  u.busy_until_s, u.landed_at ? u.landed_at->time_s : 0.0,
          g.clock_s,  g.busy_until_s, u.fuel_kj,
          s.step_count};
}

struct Search {
  double best = std::numeric_limits<double>::infinity();
  std::vector<Action> best_actions;
  std::vector<Action> path;
  std::map<StateKey, std::vector<Continuous>> seen;
  long long expanded = 0;

  bool dominated(const MissionState& s) {
    auto& front = seen[key_of(s)];
    const Continuous c = continuous_of(s);
    for (const auto& e : front) {
      if (e.dominates(c)) return true;
    }
    std::erase_if(front, [&](const Continuous& e) { return c.dominates(e); });
    front.push_back(c);
    return false;
  }

  void dfs(const MissionState& s) {
    ++expanded;
    if (s.status == Status::success) {
      const double ms = s.max_clock();
      if (ms < best - kTie) {
        best = ms;
        best_actions = path;
      }
      return;
    }
    if (s.status == Status::failure) return;
    if (s.max_clock() >= best - kTie) return;
    if (dominated(s)) return;
    const ActionMask mask = feasible_actions(s);
    const Mission& m = *s.mission;
    for (int a = 0; a < m.num_actions(); ++a) {
      if (!mask[static_cast<std::size_t>(a)]) continue;
      MissionState next = s;
      apply(next, m.action_at(a));
      path.push_back(m.action_at(a));
      dfs(next);
      path.pop_back();
    }
  }
};

}  // namespace

OracleResult brute_force_oracle(const Scenario& scenario, const TeamConfig& team, const OracleLimits& limits,
                                const MissionOptions& options) {
  require(team.num_uavs == 1 && team.num_ugvs == 1, ErrorKind::size_limit,
          "the oracle handles 1 UAV - 1 UGV teams only");
  require(static_cast<int>(scenario.tasks.size()) <= limits.max_tasks, ErrorKind::size_limit,
          "oracle limit is " + std::to_string(limits.max_tasks) + " tasks, instance has " +
              std::to_string(scenario.tasks.size()));
  MissionOptions opts = options;
  opts.selection = SelectionMode::sortie_wise;
  const auto mission = make_mission(scenario, team, opts);
  require(static_cast<int>(mission->ground_nodes().size()) <= limits.max_recharge_nodes, ErrorKind::size_limit,
          "oracle limit is " + std::to_string(limits.max_recharge_nodes) + " recharge nodes, instance has " +
              std::to_string(mission->ground_nodes().size()));

  Search search;
  const MissionState start = reset(mission);
  search.dfs(start);
  require(std::isfinite(search.best), ErrorKind::infeasible, "no decision sequence covers every task");

  OracleResult out;
  out.makespan_s = search.best;
  out.expanded = search.expanded;
  out.route.team = team;
  out.route.selection = opts.selection;
  out.route.horizon = mission->horizon();
  MissionState s = start;
  for (const Action a : search.best_actions) out.route.steps.push_back(record_step(s, a));
  finalize(out.route, s);
  return out;
}

EvrptwOracleResult evrptw_brute_force(const EvrptwModel& m, int max_tasks) {
  require(m.fleet == 1, ErrorKind::size_limit, "the E-VRPTW oracle handles a single UAV");
  require(m.num_tasks <= max_tasks, ErrorKind::size_limit,
          "E-VRPTW oracle limit is " + std::to_string(max_tasks) + " tasks");
  EvrptwOracleResult best;
  best.objective_s = std::numeric_limits<double>::infinity();
  const int n = m.num_tasks;
  const int d = m.first_copy();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<int> route;
  do {
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
      // Bit i set: land at the stop right before task perm[i].
      if (std::popcount(mask) + 1 > m.num_copies) continue;
      double fuel = m.capacity_kj;
      double cost = 0.0;
      int pos = 0;
      int copy = d;
      bool ok = true;
      route.assign(1, 0);
      for (int i = 0; i < n && ok; ++i) {
        if (mask >> i & 1U) {
          if (m.fuel(pos, d) > fuel + 1e-9) {
            ok = false;
            break;
          }
          cost += m.time(pos, d);
          pos = d;
          fuel = m.capacity_kj;
          route.push_back(copy++);
        }
        const int t = perm[static_cast<std::size_t>(i)];
        if (m.fuel(pos, t) > fuel + 1e-9) ok = false;
        fuel -= m.fuel(pos, t);
        cost += m.time(pos, t);
        pos = t;
        route.push_back(t);
      }
      if (!ok || m.fuel(pos, d) > fuel + 1e-9) continue;
      cost += m.time(pos, d);
      route.push_back(copy);
      if (cost < best.objective_s - kTie) {
        best.objective_s = cost;
        best.route = route;
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  require(std::isfinite(best.objective_s), ErrorKind::infeasible, "no fuel-feasible single-UAV route");
  return best;
}

}  // namespace coroute
