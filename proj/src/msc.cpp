#include "coroute/msc.hpp"

#include <algorithm>
#include <limits>

#include "coroute/error.hpp"

namespace coroute {

namespace {

using Bits = std::vector<std::uint64_t>;

struct CoverProblem {
  int num_tasks = 0;
  std::vector<int> candidates;      // node ids, forced excluded
  std::vector<Bits> covers;         // per candidate
  std::vector<int> forced;
  Bits initially_uncovered;
};

Point node_point(const Scenario& s, int node) {
  return node == 0 ? s.depot_point() : s.tasks.at(static_cast<std::size_t>(node - 1)).pos();
}

bool test(const Bits& b, int i) { return (b[i / 64] >> (i % 64)) & 1U; }
void set(Bits& b, int i) { b[i / 64] |= std::uint64_t{1} << (i % 64); }

int count(const Bits& b) {
  int c = 0;
  for (auto w : b) c += __builtin_popcountll(w);
  return c;
}

Bits minus(const Bits& a, const Bits& b) {
  Bits r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] & ~b[i];
  return r;
}

CoverProblem build(const Scenario& s, double radius, const std::vector<int>& forced) {
  CoverProblem p;
  p.num_tasks = static_cast<int>(s.tasks.size());
  const std::size_t words = static_cast<std::size_t>(p.num_tasks + 63) / 64;
  std::vector<int> ground{0};
  for (const auto& t : s.tasks) {
    if (t.kind == TaskKind::ground) ground.push_back(t.id + 1);
  }
  for (int f : forced) {
    require(std::find(ground.begin(), ground.end(), f) != ground.end(), ErrorKind::invalid_argument,
            "forced stop " + std::to_string(f) + " is not a ground point");
  }
  p.forced = forced;
  std::sort(p.forced.begin(), p.forced.end());
  p.forced.erase(std::unique(p.forced.begin(), p.forced.end()), p.forced.end());

  auto cover_of = [&](int node) {
    Bits b(words, 0);
    const Point c = node_point(s, node);
    for (const auto& t : s.tasks) {
      if (distance(c, t.pos()) <= radius + 1e-9) set(b, t.id);
    }
    return b;
  };
  Bits covered(words, 0);
  for (int f : p.forced) {
    const Bits b = cover_of(f);
    for (std::size_t i = 0; i < words; ++i) covered[i] |= b[i];
  }
  Bits any(words, 0);
  for (std::size_t i = 0; i < words; ++i) any[i] = covered[i];
  for (int g : ground) {
    if (std::binary_search(p.forced.begin(), p.forced.end(), g)) continue;
    p.candidates.push_back(g);
    p.covers.push_back(cover_of(g));
    for (std::size_t i = 0; i < words; ++i) any[i] |= p.covers.back()[i];
  }
  for (int t = 0; t < p.num_tasks; ++t) {
    if (!test(any, t)) {
      fail(ErrorKind::infeasible, "task " + std::to_string(t) +
                                      " is beyond the coverage radius of every ground point");
    }
  }
  p.initially_uncovered = Bits(words, 0);
  for (int t = 0; t < p.num_tasks; ++t) {
    if (!test(covered, t)) set(p.initially_uncovered, t);
  }
  return p;
}

RefuelPlan finish(const Scenario& s, std::vector<int> stops) {
  RefuelPlan plan;
  std::sort(stops.begin(), stops.end());
  plan.stops = stops;
  for (const auto& t : s.tasks) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int st : stops) {
      const double d = distance(node_point(s, st), t.pos());
      if (d < best_d) {
        best_d = d;
        best = st;
      }
    }
    plan.cover[t.id] = best;
  }
  return plan;
}

struct Search {
  const CoverProblem& p;
  int max_cover = 1;
  std::vector<int> chosen;
  std::vector<int> best;
  bool have_best = false;

  void run(const Bits& uncovered) {
    const int left = count(uncovered);
    if (left == 0) {
      if (!have_best || chosen.size() < best.size()) {
        best = chosen;
        have_best = true;
      }
      return;
    }
    const int lower = static_cast<int>(chosen.size()) + (left + max_cover - 1) / max_cover;
    if (have_best && lower >= static_cast<int>(best.size())) return;

    // Branch on the uncovered task with the fewest options.
    int pick = -1;
    int pick_options = std::numeric_limits<int>::max();
    for (int t = 0; t < p.num_tasks; ++t) {
      if (!test(uncovered, t)) continue;
      int options = 0;
      for (const auto& c : p.covers) options += test(c, t) ? 1 : 0;
      if (options < pick_options) {
        pick_options = options;
        pick = t;
      }
    }
    std::vector<int> order;
    for (std::size_t c = 0; c < p.covers.size(); ++c) {
      if (test(p.covers[c], pick)) order.push_back(static_cast<int>(c));
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      Bits ia(uncovered.size()), ib(uncovered.size());
      for (std::size_t i = 0; i < uncovered.size(); ++i) {
        ia[i] = uncovered[i] & p.covers[a][i];
        ib[i] = uncovered[i] & p.covers[b][i];
      }
      return count(ia) > count(ib);
    });
    for (int c : order) {
      chosen.push_back(c);
      run(minus(uncovered, p.covers[c]));
      chosen.pop_back();
    }
  }
};

std::vector<int> greedy_indices(const CoverProblem& p) {
  Bits uncovered = p.initially_uncovered;
  std::vector<int> chosen;
  while (count(uncovered) > 0) {
    int best = -1;
    int best_gain = 0;
    for (std::size_t c = 0; c < p.covers.size(); ++c) {
      const int gain = count(uncovered) - count(minus(uncovered, p.covers[c]));
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<int>(c);
      }
    }
    chosen.push_back(best);
    uncovered = minus(uncovered, p.covers[best]);
  }

  auto covers_all = [&](const std::vector<int>& set) {
    Bits u = p.initially_uncovered;
    for (int c : set) u = minus(u, p.covers[c]);
    return count(u) == 0;
  };
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i < chosen.size() && !improved; ++i) {
      auto without = chosen;
      without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
      if (covers_all(without)) {
        chosen = without;
        improved = true;
      }
    }
    for (std::size_t i = 0; i < chosen.size() && !improved; ++i) {
      for (std::size_t j = i + 1; j < chosen.size() && !improved; ++j) {
        auto rest = chosen;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
        for (std::size_t c = 0; c < p.covers.size(); ++c) {
          rest.push_back(static_cast<int>(c));
          if (covers_all(rest)) {
            chosen = rest;
            improved = true;
            break;
          }
          rest.pop_back();
        }
      }
    }
  }
  return chosen;
}

std::vector<int> to_nodes(const CoverProblem& p, const std::vector<int>& indices) {
  std::vector<int> stops = p.forced;
  for (int c : indices) stops.push_back(p.candidates[c]);
  return stops;
}

}  // namespace

RefuelPlan solve_msc(const Scenario& scenario, double coverage_radius_m, const std::vector<int>& forced) {
  const CoverProblem p = build(scenario, coverage_radius_m, forced);
  if (static_cast<int>(p.candidates.size()) > kMscExactLimit) {
    return finish(scenario, to_nodes(p, greedy_indices(p)));
  }
  Search search{p, 1, {}, {}, false};
  for (const auto& c : p.covers) search.max_cover = std::max(search.max_cover, count(c));
  // Seed the bound with the greedy answer.
  search.best = greedy_indices(p);
  search.have_best = true;
  search.run(p.initially_uncovered);
  return finish(scenario, to_nodes(p, search.best));
}

RefuelPlan solve_msc_greedy(const Scenario& scenario, double coverage_radius_m,
                            const std::vector<int>& forced) {
  const CoverProblem p = build(scenario, coverage_radius_m, forced);
  return finish(scenario, to_nodes(p, greedy_indices(p)));
}

}  // namespace coroute
