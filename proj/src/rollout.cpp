#include "coroute/rollout.hpp"

#include <cmath>
#include <exception>
#include <memory>

#include "coroute/error.hpp"

namespace coroute {

std::string DecodePolicy::name() const {
  return strategy == Strategy::greedy ? "greedy" : "sample" + std::to_string(samples);
}

ActionChooser greedy_chooser() {
  return [](const std::vector<Real>& probs, const ActionMask& mask) {
    int best = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!mask[i]) continue;
      if (best < 0 || probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
  };
}

ActionChooser sampling_chooser(Rng& rng) {
  return [&rng](const std::vector<Real>& probs, const ActionMask& mask) {
    const double u = rng.uniform();
    double cum = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!mask[i]) continue;
      last = static_cast<int>(i);
      cum += probs[i];
      if (u < cum) return last;
    }
    return last;
  };
}

ActionChooser forced_chooser(const Mission& mission, std::vector<Action> actions) {
  auto next = std::make_shared<std::size_t>(0);
  const Mission* m = &mission;
  return [m, next, actions = std::move(actions)](const std::vector<Real>&, const ActionMask& mask) {
    require(*next < actions.size(), ErrorKind::contract_violation, "forced trajectory ran out of actions");
    const int a = m->action_index(actions[(*next)++]);
    require(mask[static_cast<std::size_t>(a)] != 0, ErrorKind::contract_violation,
            "forced action " + to_string(m->action_at(a)) + " is masked");
    return a;
  };
}

Episode run_episode(PolicyGraph& graph, MissionState s, const ActionChooser& choose) {
  const Mission& m = *s.mission;
  require(m.options().selection != SelectionMode::scripted, ErrorKind::contract_violation,
          "policy rollouts need an agent selection rule");
  Tape& tape = graph.tape();
  Episode ep;
  ep.route.team = m.team();
  ep.route.selection = m.options().selection;
  ep.route.horizon = m.horizon();
  Var total = tape.constant(Tensor::scalar(0));
  std::vector<Real> probs;
  while (s.status == Status::running) {
    const ActionMask mask = feasible_actions(s);
    const Var lp = graph.log_probs(s, mask);
    const Tensor& values = tape.value(lp);
    probs.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) probs[i] = mask[i] ? std::exp(values.values[i]) : Real(0);
    const int a = choose(probs, mask);
    require(a >= 0 && mask[static_cast<std::size_t>(a)] != 0, ErrorKind::contract_violation,
            "policy picked a masked action");
    total = tape.add(total, tape.element(lp, 0, a));
    const Action action = m.action_at(a);
    ep.actions.push_back(action);
    ep.route.steps.push_back(record_step(s, action));
  }
  finalize(ep.route, s);
  ep.log_prob = total;
  ep.route.log_prob = tape.value(total).item();
  return ep;
}

namespace {

int best_index(const std::vector<RouteSolution>& pool) {
  int best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].return_s < pool[static_cast<std::size_t>(best)].return_s) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

RolloutResult rollout_from(const MissionState& start, const PolicyParams& params, const DecodePolicy& policy) {
  require(policy.samples >= 1, ErrorKind::invalid_argument, "sample count must be at least 1");
  const Tensor embeddings = encoder_forward(encoder_inputs(*start.mission), params);
  RolloutResult out;
  if (policy.strategy == DecodePolicy::Strategy::greedy) {
    Tape tape(false);
    auto g = PolicyGraph::from_embeddings(params, tape, embeddings);
    out.pool.push_back(run_episode(g, start, greedy_chooser()).route);
    return out;
  }
  const int n = policy.samples;
  out.pool.resize(static_cast<std::size_t>(n));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      Tape tape(false);
      auto g = PolicyGraph::from_embeddings(params, tape, embeddings);
      Rng rng(Rng::mix(policy.seed, static_cast<std::uint64_t>(i)));
      out.pool[static_cast<std::size_t>(i)] = run_episode(g, start, sampling_chooser(rng)).route;
    } catch (...) {
#pragma omp critical(coroute_rollout_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  out.best = best_index(out.pool);
  return out;
}

RolloutResult rollout(const Scenario& scenario, const TeamConfig& team, const PolicyParams& params,
                      const DecodePolicy& policy, const MissionOptions& options) {
  return rollout_from(reset(make_mission(scenario, team, options)), params, policy);
}

}  // namespace coroute
