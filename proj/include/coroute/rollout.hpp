#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "coroute/policy.hpp"
#include "coroute/rng.hpp"
#include "coroute/trace.hpp"

namespace coroute {

struct DecodePolicy {
  enum class Strategy { greedy, sample };
  Strategy strategy = Strategy::greedy;
  int samples = 1;
  std::uint64_t seed = 0;

  static DecodePolicy greedy() { return {}; }
  static DecodePolicy sample(int n, std::uint64_t seed) { return {Strategy::sample, n, seed}; }
  /// "greedy" or "sample<N>"
  std::string name() const;
};

/// Picks an action index given the active agent's probabilities and mask.
using ActionChooser = std::function<int(const std::vector<Real>& probs, const ActionMask& mask)>;

ActionChooser greedy_chooser();
/// Inverse-CDF draw over the probabilities with one uniform per decision.
ActionChooser sampling_chooser(Rng& rng);
/// Replays a fixed action list; throws contract_violation if one is masked.
ActionChooser forced_chooser(const Mission& mission, std::vector<Action> actions);

struct Episode {
  RouteSolution route;
  Var log_prob;  ///< sum of log pi over the taken actions, on the graph's tape
  std::vector<Action> actions;
};

/// Drives the environment from `start` until it terminates, letting the
/// policy act for every decision. Environment failures end the episode with
/// a penalized return rather than an exception.
Episode run_episode(PolicyGraph& graph, MissionState start, const ActionChooser& choose);

struct RolloutResult {
  std::vector<RouteSolution> pool;
  int best = 0;  ///< lowest return; ties go to the earlier trajectory

  const RouteSolution& best_route() const { return pool.at(static_cast<std::size_t>(best)); }
  double best_return() const { return best_route().return_s; }
};

/// Greedy: one deterministic trajectory. sample(N): N trajectories with
/// independent streams mix(seed, i), decoded in parallel.
RolloutResult rollout(const Scenario& scenario, const TeamConfig& team, const PolicyParams& params,
                      const DecodePolicy& policy, const MissionOptions& options = {});

/// Same, continuing from a mid-mission state.
RolloutResult rollout_from(const MissionState& start, const PolicyParams& params, const DecodePolicy& policy);

}  // namespace coroute
