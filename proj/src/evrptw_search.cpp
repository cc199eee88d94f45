#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "coroute/error.hpp"
#include "coroute/evrptw.hpp"
#include "coroute/rng.hpp"

namespace coroute {

namespace {

constexpr int kR = -1;  // recharge marker
constexpr double kFuelEps = 1e-9;

using Tokens = std::vector<int>;
using Plan = std::vector<Tokens>;

struct Evaluator {
  const EvrptwModel& m;
  int dest = 0;
  bool source_is_dest = false;

  explicit Evaluator(const EvrptwModel& model) : m(model), dest(model.first_copy()) {
    source_is_dest = model.node[0] == model.node[dest];
  }

  // Drops recharge markers that would create empty sorties.
  void normalize(Tokens& r) const {
    Tokens out;
    for (int tok : r) {
      if (tok == kR) {
        if (out.empty() ? source_is_dest : out.back() == kR) continue;
      }
      out.push_back(tok);
    }
    // A marker right before the final landing would add an empty sortie.
    while (!out.empty() && out.back() == kR) out.pop_back();
    r = std::move(out);
  }

  /// Travel time of one route; +inf when some sortie runs out of fuel.
  double route_cost(const Tokens& r) const {
    double cost = 0.0;
    double fuel = m.capacity_kj;
    int pos = 0;
    for (int tok : r) {
      const int v = tok == kR ? dest : tok;
      if (tok == kR) {
        if (m.fuel(pos, dest) > fuel + kFuelEps) return std::numeric_limits<double>::infinity();
        fuel = m.capacity_kj;
      } else {
        fuel -= m.fuel(pos, v);
      }
      cost += m.time(pos, v);
      pos = v;
    }
    if (m.fuel(pos, dest) > fuel + kFuelEps) return std::numeric_limits<double>::infinity();
    return cost + m.time(pos, dest);
  }

  double plan_cost(const Plan& p) const {
    double c = 0.0;
    for (const auto& r : p) c += route_cost(r);
    return c;
  }

  std::vector<std::vector<int>> to_routes(const Plan& p) const {
    std::vector<std::vector<int>> routes;
    int copy = m.first_copy();
    for (const auto& r : p) {
      std::vector<int> route{0};
      for (int tok : r) route.push_back(tok == kR ? copy++ : tok);
      route.push_back(copy++);
      routes.push_back(std::move(route));
    }
    return routes;
  }

  // Physical arc endpoints: the source, tasks, and one shared id for the stop.
  template <typename F>
  void for_each_arc(const Tokens& r, F&& f) const {
    int pos = 0;
    for (int tok : r) {
      const int v = tok == kR ? dest : tok;
      f(pos, v);
      pos = v;
    }
    f(pos, dest);
  }
};

Plan construct(const Evaluator& ev) {
  const EvrptwModel& m = ev.m;
  const int d = ev.dest;
  for (int t = 1; t <= m.num_tasks; ++t) {
    const bool from_stop = m.fuel(d, t) + m.fuel(t, d) <= m.capacity_kj + kFuelEps;
    const bool from_source = m.fuel(0, t) + m.fuel(t, d) <= m.capacity_kj + kFuelEps;
    require(from_stop || from_source, ErrorKind::infeasible,
            "task " + std::to_string(m.node[t] - 1) + " cannot be served from its refuel stop");
  }
  Plan plan(static_cast<std::size_t>(m.fleet));
  struct Uav {
    int pos = 0;
    double fuel = 0.0;
    double clock = 0.0;
  };
  std::vector<Uav> uavs(static_cast<std::size_t>(m.fleet));
  for (int k = 0; k < m.fleet; ++k) {
    uavs[k].fuel = m.capacity_kj;
    uavs[k].clock = m.start_s[k];
  }
  std::vector<char> done(static_cast<std::size_t>(m.num_tasks + 1), 0);
  std::vector<char> source_only(static_cast<std::size_t>(m.num_tasks + 1), 0);
  for (int t = 1; t <= m.num_tasks; ++t) {
    source_only[t] = m.fuel(d, t) + m.fuel(t, d) > m.capacity_kj + kFuelEps;
  }
  std::vector<char> at_source(static_cast<std::size_t>(m.fleet), 1);
  int remaining = m.num_tasks;
  // Tasks that can only be served on the first sortie go first.
  auto next_task = [&](int k) {
    const Uav& u = uavs[k];
    int best = -1;
    for (int pass = 0; pass < 2 && best < 0; ++pass) {
      if (pass == 0 && !at_source[k]) continue;
      for (int t = 1; t <= m.num_tasks; ++t) {
        if (done[t] || (pass == 0 && !source_only[t])) continue;
        if (m.fuel(u.pos, t) + m.fuel(t, d) > u.fuel + kFuelEps) continue;
        if (best < 0 || m.time(u.pos, t) < m.time(u.pos, best)) best = t;
      }
    }
    return best;
  };
  while (remaining > 0) {
    std::vector<int> order(static_cast<std::size_t>(m.fleet));
    for (int i = 0; i < m.fleet; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return uavs[a].clock < uavs[b].clock; });
    bool progressed = false;
    for (int k : order) {
      Uav& u = uavs[k];
      const int best = next_task(k);
      if (best > 0) {
        plan[k].push_back(best);
        u.fuel -= m.fuel(u.pos, best);
        u.clock += m.time(u.pos, best);
        u.pos = best;
        done[best] = 1;
        --remaining;
        progressed = true;
        break;
      }
      const bool fresh_at_stop = u.pos == d && u.fuel == m.capacity_kj;
      if (fresh_at_stop) continue;
      plan[k].push_back(kR);
      u.clock += m.time(u.pos, d) + m.recharge_time_s;
      u.fuel = m.capacity_kj;
      u.pos = d;
      at_source[k] = 0;
      progressed = true;
      break;
    }
    if (!progressed) {
      int left = 1;
      while (done[left]) ++left;
      fail(ErrorKind::infeasible,
           "task " + std::to_string(m.node[left] - 1) + " cannot be served from its refuel stop");
    }
  }
  for (auto& r : plan) ev.normalize(r);
  return plan;
}

enum class MoveKind { relocate, swap, reverse, insert_recharge, remove_recharge };

struct Move {
  MoveKind kind = MoveKind::relocate;
  int r1 = 0, i = 0, r2 = 0, j = 0;
};

/// Applies a move to a copy of the touched routes; false when not applicable.
bool apply_move(const Evaluator& ev, const Plan& p, const Move& mv, Plan& out) {
  out = p;
  switch (mv.kind) {
    case MoveKind::relocate: {
      auto& from = out[mv.r1];
      if (mv.i >= static_cast<int>(from.size()) || from[mv.i] == kR) return false;
      const int tok = from[mv.i];
      from.erase(from.begin() + mv.i);
      auto& to = out[mv.r2];
      if (mv.j > static_cast<int>(to.size())) return false;
      if (mv.r1 == mv.r2 && mv.j == mv.i) return false;
      to.insert(to.begin() + mv.j, tok);
      break;
    }
    case MoveKind::swap: {
      auto& a = out[mv.r1];
      auto& b = out[mv.r2];
      if (mv.i >= static_cast<int>(a.size()) || mv.j >= static_cast<int>(b.size())) return false;
      if (a[mv.i] == kR || b[mv.j] == kR) return false;
      std::swap(a[mv.i], b[mv.j]);
      break;
    }
    case MoveKind::reverse: {
      auto& r = out[mv.r1];
      if (mv.j >= static_cast<int>(r.size()) || mv.i >= mv.j) return false;
      std::reverse(r.begin() + mv.i, r.begin() + mv.j + 1);
      break;
    }
    case MoveKind::insert_recharge: {
      auto& r = out[mv.r1];
      if (mv.i > static_cast<int>(r.size())) return false;
      r.insert(r.begin() + mv.i, kR);
      break;
    }
    case MoveKind::remove_recharge: {
      auto& r = out[mv.r1];
      if (mv.i >= static_cast<int>(r.size()) || r[mv.i] != kR) return false;
      r.erase(r.begin() + mv.i);
      break;
    }
  }
  ev.normalize(out[mv.r1]);
  if (mv.r2 != mv.r1) ev.normalize(out[mv.r2]);
  return out != p;
}

std::vector<Move> neighbourhood(const Plan& p) {
  std::vector<Move> moves;
  const int k = static_cast<int>(p.size());
  for (int r1 = 0; r1 < k; ++r1) {
    const int n1 = static_cast<int>(p[r1].size());
    for (int i = 0; i < n1; ++i) {
      if (p[r1][i] == kR) continue;
      for (int r2 = 0; r2 < k; ++r2) {
        const int limit = static_cast<int>(p[r2].size()) - (r1 == r2 ? 1 : 0);
        for (int j = 0; j <= limit; ++j) {
          if (r1 == r2 && j == i) continue;
          moves.push_back({MoveKind::relocate, r1, i, r2, j});
        }
      }
    }
    for (int i = 0; i < n1; ++i) {
      if (p[r1][i] == kR) continue;
      for (int r2 = r1; r2 < k; ++r2) {
        for (int j = r2 == r1 ? i + 1 : 0; j < static_cast<int>(p[r2].size()); ++j) {
          if (p[r2][j] == kR) continue;
          moves.push_back({MoveKind::swap, r1, i, r2, j});
        }
      }
    }
    for (int i = 0; i < n1; ++i) {
      for (int j = i + 2; j < n1; ++j) moves.push_back({MoveKind::reverse, r1, i, r1, j});
    }
    for (int i = 0; i <= n1; ++i) moves.push_back({MoveKind::insert_recharge, r1, i, r1, 0});
    for (int i = 0; i < n1; ++i) {
      if (p[r1][i] == kR) moves.push_back({MoveKind::remove_recharge, r1, i, r1, 0});
    }
  }
  return moves;
}

/// Tabu attributes touched by a move: task ids, or (num_tasks + 1 + task
/// before the marker) for recharge edits.
std::vector<int> attributes(const EvrptwModel& m, const Plan& p, const Move& mv) {
  auto before = [&](int r, int i) {
    for (int x = i - 1; x >= 0; --x) {
      if (p[r][x] != kR) return p[r][x];
    }
    return 0;
  };
  switch (mv.kind) {
    case MoveKind::relocate: return {p[mv.r1][mv.i]};
    case MoveKind::swap: return {p[mv.r1][mv.i], p[mv.r2][mv.j]};
    case MoveKind::reverse: {
      std::vector<int> a;
      if (p[mv.r1][mv.i] != kR) a.push_back(p[mv.r1][mv.i]);
      if (p[mv.r1][mv.j] != kR) a.push_back(p[mv.r1][mv.j]);
      return a;
    }
    case MoveKind::insert_recharge:
    case MoveKind::remove_recharge: return {m.num_tasks + 1 + before(mv.r1, mv.i)};
  }
  return {};
}

Move random_move(const Plan& p, Rng& rng) {
  const int k = static_cast<int>(p.size());
  Move mv;
  mv.kind = static_cast<MoveKind>(rng.below(5));
  mv.r1 = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  mv.r2 = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  const auto n1 = static_cast<std::uint64_t>(p[mv.r1].size());
  const auto n2 = static_cast<std::uint64_t>(p[mv.r2].size());
  switch (mv.kind) {
    case MoveKind::relocate:
      if (n1 == 0) return mv;
      mv.i = static_cast<int>(rng.below(n1));
      mv.j = static_cast<int>(rng.below(n2 + (mv.r1 == mv.r2 ? 0 : 1)));
      break;
    case MoveKind::swap:
      if (n1 == 0 || n2 == 0) return mv;
      mv.i = static_cast<int>(rng.below(n1));
      mv.j = static_cast<int>(rng.below(n2));
      break;
    case MoveKind::reverse:
      mv.r2 = mv.r1;
      if (n1 < 3) return mv;
      mv.i = static_cast<int>(rng.below(n1));
      mv.j = static_cast<int>(rng.below(n1));
      if (mv.i > mv.j) std::swap(mv.i, mv.j);
      break;
    case MoveKind::insert_recharge:
      mv.r2 = mv.r1;
      mv.i = static_cast<int>(rng.below(n1 + 1));
      break;
    case MoveKind::remove_recharge:
      mv.r2 = mv.r1;
      if (n1 == 0) return mv;
      mv.i = static_cast<int>(rng.below(n1));
      break;
  }
  return mv;
}

class Clock {
 public:
  explicit Clock(int wall_ms) : wall_ms_(wall_ms), start_(std::chrono::steady_clock::now()) {}
  bool expired() const {
    if (wall_ms_ <= 0) return false;
    const auto dt = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration_cast<std::chrono::milliseconds>(dt).count() >= wall_ms_;
  }

 private:
  int wall_ms_;
  std::chrono::steady_clock::time_point start_;
};

struct Tracker {
  Plan best;
  double best_cost;
  std::vector<double>* history;

  void offer(const Plan& p, double cost) {
    if (cost < best_cost - 1e-9) {
      best = p;
      best_cost = cost;
    }
  }
  void tick() { history->push_back(best_cost); }
};

void run_gls(const Evaluator& ev, Plan current, SearchBudget budget, const SearchParams& params,
             Tracker& tr, int& iterations) {
  const EvrptwModel& m = ev.m;
  const int ids = m.num_tasks + 2;  // source, tasks, shared stop id
  auto id_of = [&](int v) { return v == ev.dest ? m.num_tasks + 1 : v; };
  std::vector<double> penalty(static_cast<std::size_t>(ids) * ids, 0.0);
  double mean = 0.0;
  int arcs = 0;
  for (int a = 0; a <= m.num_tasks + 1; ++a) {
    for (int b = 0; b <= m.num_tasks + 1; ++b) {
      if (a == b) continue;
      mean += m.time(a == m.num_tasks + 1 ? ev.dest : a, b == m.num_tasks + 1 ? ev.dest : b);
      ++arcs;
    }
  }
  mean = arcs > 0 ? mean / arcs : 0.0;
  const double lambda = params.gls_lambda_factor * mean;
  auto augmented = [&](const Plan& p, double cost) {
    double pen = 0.0;
    for (const auto& r : p) {
      ev.for_each_arc(r, [&](int a, int b) { pen += penalty[id_of(a) * ids + id_of(b)]; });
    }
    return cost + lambda * pen;
  };
  double cost = ev.plan_cost(current);
  double aug = augmented(current, cost);
  Clock clock(budget.wall_ms);
  Plan cand;
  for (iterations = 0; iterations < budget.iterations && !clock.expired(); ++iterations) {
    Plan best_plan;
    double best_aug = aug - 1e-9;
    double best_cost = 0.0;
    for (const auto& mv : neighbourhood(current)) {
      if (!apply_move(ev, current, mv, cand)) continue;
      const double c = ev.plan_cost(cand);
      if (!std::isfinite(c)) continue;
      const double a = augmented(cand, c);
      if (a < best_aug) {
        best_aug = a;
        best_cost = c;
        best_plan = cand;
      }
    }
    if (!best_plan.empty()) {
      current = std::move(best_plan);
      cost = best_cost;
      aug = best_aug;
      tr.offer(current, cost);
    } else {
      // Local minimum of the augmented cost: penalise the arcs with the
      // highest utility cost / (1 + penalty).
      double top = -1.0;
      std::vector<std::pair<int, int>> pick;
      for (const auto& r : current) {
        ev.for_each_arc(r, [&](int a, int b) {
          if (m.time(a, b) <= 0.0) return;
          const double u = m.time(a, b) / (1.0 + penalty[id_of(a) * ids + id_of(b)]);
          if (u > top + 1e-12) {
            top = u;
            pick.assign(1, {a, b});
          } else if (std::abs(u - top) <= 1e-12) {
            pick.emplace_back(a, b);
          }
        });
      }
      for (auto [a, b] : pick) penalty[id_of(a) * ids + id_of(b)] += 1.0;
      aug = augmented(current, cost);
    }
    tr.tick();
  }
}

void run_tabu(const Evaluator& ev, Plan current, SearchBudget budget, const SearchParams& params,
              Tracker& tr, int& iterations) {
  const EvrptwModel& m = ev.m;
  const int tenure = params.tabu_tenure > 0 ? params.tabu_tenure
                                            : (m.num_vertices() + 1) / 2;
  std::vector<int> tabu_until(static_cast<std::size_t>(2 * m.num_tasks + 3), -1);
  Clock clock(budget.wall_ms);
  Plan cand;
  for (iterations = 0; iterations < budget.iterations && !clock.expired(); ++iterations) {
    Plan best_plan;
    Move best_move;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& mv : neighbourhood(current)) {
      if (!apply_move(ev, current, mv, cand)) continue;
      const double c = ev.plan_cost(cand);
      if (!std::isfinite(c)) continue;
      bool is_tabu = false;
      for (int a : attributes(m, current, mv)) is_tabu = is_tabu || tabu_until[a] > iterations;
      if (is_tabu && c >= tr.best_cost - 1e-9) continue;
      if (c < best_cost - 1e-12) {
        best_cost = c;
        best_plan = cand;
        best_move = mv;
      }
    }
    if (best_plan.empty()) {
      tr.tick();
      continue;
    }
    for (int a : attributes(m, current, best_move)) tabu_until[a] = iterations + 1 + tenure;
    current = std::move(best_plan);
    tr.offer(current, best_cost);
    tr.tick();
  }
}

void run_anneal(const Evaluator& ev, Plan current, SearchBudget budget, const SearchParams& params,
                double construction_cost, Rng& rng, Tracker& tr, int& iterations) {
  double temperature = std::max(params.anneal_t0_factor * construction_cost, 1e-9);
  double cost = ev.plan_cost(current);
  Clock clock(budget.wall_ms);
  Plan cand;
  for (iterations = 0; iterations < budget.iterations && !clock.expired(); ++iterations) {
    const Move mv = random_move(current, rng);
    const double u = rng.uniform();
    if (apply_move(ev, current, mv, cand)) {
      const double c = ev.plan_cost(cand);
      if (std::isfinite(c)) {
        const double delta = c - cost;
        if (delta <= 0.0 || u < std::exp(-delta / temperature)) {
          current = cand;
          cost = c;
          tr.offer(current, cost);
        }
      }
    }
    temperature *= params.anneal_ratio;
    tr.tick();
  }
}

}  // namespace

EvrptwSolution construct_evrptw(const EvrptwModel& model) {
  const Evaluator ev(model);
  const Plan plan = construct(ev);
  return schedule_routes(model, ev.to_routes(plan));
}

SearchResult solve_evrptw(const EvrptwModel& model, SearchMethod method, SearchBudget budget,
                          std::uint64_t seed, const SearchParams& params) {
  require(model.fleet >= 1 && static_cast<int>(model.start_s.size()) == model.fleet,
          ErrorKind::invalid_argument, "model fleet and start times disagree");
  require(model.num_copies >= 1, ErrorKind::invalid_argument, "model has no stop copies");
  const Evaluator ev(model);
  const Plan start = construct(ev);
  SearchResult res;
  res.construction_objective_s = ev.plan_cost(start);
  Tracker tr{start, res.construction_objective_s, &res.best_history};
  if (model.num_tasks > 0) {
    Rng rng(seed);
    switch (method) {
      case SearchMethod::gls: run_gls(ev, start, budget, params, tr, res.iterations); break;
      case SearchMethod::tabu: run_tabu(ev, start, budget, params, tr, res.iterations); break;
      case SearchMethod::anneal:
        run_anneal(ev, start, budget, params, res.construction_objective_s, rng, tr, res.iterations);
        break;
    }
  }
  res.solution = schedule_routes(model, ev.to_routes(tr.best));
  return res;
}

}  // namespace coroute
