#include "coroute/tsp.hpp"

#include <algorithm>
#include <limits>

#include "coroute/env.hpp"
#include "coroute/error.hpp"

namespace coroute {

double route_cost(const std::vector<std::vector<double>>& cost, const std::vector<int>& order,
                  bool closed) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) total += cost[order[i - 1]][order[i]];
  if (closed && order.size() > 1) total += cost[order.back()][order.front()];
  return total;
}

std::vector<int> solve_tsp_held_karp(const std::vector<std::vector<double>>& cost, bool closed) {
  const int n = static_cast<int>(cost.size());
  require(n >= 1, ErrorKind::invalid_argument, "empty tour");
  require(n - 1 <= 16, ErrorKind::size_limit, "too many stops for Held-Karp");
  if (n <= 2) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[i] = i;
    return order;
  }
  // dp[mask][j]: cheapest path from 0 through the stops in mask ending at
  // stop j + 1 (mask over stops 1..n-1).
  const int m = n - 1;
  const std::size_t full = std::size_t{1} << m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full * m, inf);
  std::vector<int> parent(full * m, -1);
  for (int j = 0; j < m; ++j) dp[(std::size_t{1} << j) * m + j] = cost[0][j + 1];
  for (std::size_t mask = 1; mask < full; ++mask) {
    for (int j = 0; j < m; ++j) {
      if (!(mask >> j & 1U)) continue;
      const double here = dp[mask * m + j];
      if (here == inf) continue;
      for (int k = 0; k < m; ++k) {
        if (mask >> k & 1U) continue;
        const std::size_t next = mask | (std::size_t{1} << k);
        const double c = here + cost[j + 1][k + 1];
        if (c < dp[next * m + k]) {
          dp[next * m + k] = c;
          parent[next * m + k] = j;
        }
      }
    }
  }
  int last = 0;
  double best = inf;
  for (int j = 0; j < m; ++j) {
    const double c = dp[(full - 1) * m + j] + (closed ? cost[j + 1][0] : 0.0);
    if (c < best) {
      best = c;
      last = j;
    }
  }
  std::vector<int> order;
  std::size_t mask = full - 1;
  while (last >= 0) {
    order.push_back(last + 1);
    const int prev = parent[mask * m + last];
    mask &= ~(std::size_t{1} << last);
    last = prev;
  }
  order.push_back(0);
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<int> solve_tsp_two_opt(const std::vector<std::vector<double>>& cost, bool closed) {
  const int n = static_cast<int>(cost.size());
  require(n >= 1, ErrorKind::invalid_argument, "empty tour");
  std::vector<int> order{0};
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  used[0] = 1;
  for (int step = 1; step < n; ++step) {
    int best = -1;
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      if (best < 0 || cost[order.back()][j] < cost[order.back()][best]) best = j;
    }
    used[best] = 1;
    order.push_back(best);
  }
  // Reverse order[i..j]; position 0 stays fixed as the start.
  bool improved = true;
  while (improved) {
    improved = false;
    double current = route_cost(cost, order, closed);
    for (int i = 1; i + 1 < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        std::reverse(order.begin() + i, order.begin() + j + 1);
        const double c = route_cost(cost, order, closed);
        if (c < current - 1e-9) {
          current = c;
          improved = true;
        } else {
          std::reverse(order.begin() + i, order.begin() + j + 1);
        }
      }
    }
  }
  return order;
}

std::vector<int> solve_tsp(const std::vector<std::vector<double>>& cost, bool closed) {
  if (static_cast<int>(cost.size()) - 1 <= kTspExactLimit) return solve_tsp_held_karp(cost, closed);
  return solve_tsp_two_opt(cost, closed);
}

std::vector<int> solve_tsp_stops(const Mission& mission, const std::vector<int>& stops) {
  require(!stops.empty(), ErrorKind::invalid_argument, "no stops to order");
  std::vector<int> nodes{kDepotNode};
  for (int s : stops) {
    if (s != kDepotNode) nodes.push_back(s);
  }
  const std::size_t n = nodes.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i][j] = mission.road_time(nodes[i], nodes[j]);
  }
  std::vector<int> out;
  for (int i : solve_tsp(cost, false)) out.push_back(nodes[i]);
  return out;
}

}  // namespace coroute
