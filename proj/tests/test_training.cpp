#include <cmath>
#include <filesystem>
#include <limits>

#include <omp.h>

#include "coroute/error.hpp"
#include "coroute/rollout.hpp"
#include "coroute/training.hpp"
#include "doctest.h"

using namespace coroute;

namespace {

TrainConfig small_config() {
  TrainConfig c = TrainConfig::desk();
  c.epochs = 2;
  c.batches_per_epoch = 2;
  c.batch_size = 4;
  c.problem.aerial = 4;
  c.problem.ground = 2;
  c.policy = PolicyConfig::tiny();
  return c;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  CHECK(lr_at_epoch(1e-4, 0.995, 0) == 1e-4);
  CHECK(lr_at_epoch(1e-4, 0.995, 1) == doctest::Approx(9.95e-5).epsilon(1e-12));
  CHECK(lr_at_epoch(1e-4, 0.995, 100) == doctest::Approx(6.05770436490728e-5).epsilon(1e-12));
  for (int e = 1; e < 50; ++e) CHECK(lr_at_epoch(1e-4, 0.995, e) < lr_at_epoch(1e-4, 0.995, e - 1));
  CHECK_THROWS_AS(lr_at_epoch(1e-4, 0.995, -1), Error);
}

TEST_CASE("paired t-test against the incomplete-beta oracle") {
  const std::vector<double> baseline{231.0, 219.5, 240.25, 228.0, 251.5, 212.75, 236.0, 244.5, 226.25, 233.0};
  const std::vector<double> policy{225.5, 221.0, 232.0, 224.75, 240.0, 214.5, 229.25, 238.0, 227.5, 226.0};
  CHECK(std::abs(paired_t_test(policy, baseline) - 0.006857633013455374) < 1e-6);
  // Reversed roles: the policy is now worse, so the upper tail is large.
  CHECK(std::abs(paired_t_test(baseline, policy) - (1 - 0.006857633013455374)) < 1e-6);
}

TEST_CASE("paired t-test degenerate spreads and contract") {
  const std::vector<double> same{5, 6, 7, 8};
  CHECK(paired_t_test(same, same) == 1.0);
  CHECK(paired_t_test({4, 5, 6, 7}, {5, 6, 7, 8}) == 0.0);
  CHECK(paired_t_test({6, 7, 8, 9}, {5, 6, 7, 8}) == 1.0);
  try {
    paired_t_test({1, 2, 3}, {1, 2});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract_violation);
  }
  CHECK_THROWS_AS(paired_t_test({1}, {2}), Error);
}

TEST_CASE("Adam with zero gradient leaves parameters unchanged") {
  auto params = init_policy(PolicyConfig::tiny(), 3);
  const auto before = params;
  auto state = adam_init(params);
  adam_step(params, params.zeros_like(), state, 1e-3, 0.9, 0.999, 1e-8);
  CHECK(params == before);
  CHECK(state.step == 1);
}

TEST_CASE("Adam first step moves each weight by lr against the gradient sign") {
  auto params = init_policy(PolicyConfig::tiny(), 3);
  const auto before = params;
  auto grads = params.zeros_like();
  grads[0].values[0] = 2.5;
  grads[0].values[1] = -0.1;
  auto state = adam_init(params);
  adam_step(params, grads, state, 1e-3, 0.9, 0.999, 1e-8);
  CHECK(params.tensors[0].values[0] == doctest::Approx(before.tensors[0].values[0] - 1e-3).epsilon(1e-9));
  CHECK(params.tensors[0].values[1] == doctest::Approx(before.tensors[0].values[1] + 1e-3).epsilon(1e-6));
  CHECK(params.tensors[0].values[2] == before.tensors[0].values[2]);
}

TEST_CASE("descending the loss of a better-than-baseline trajectory raises its log-probability") {
  const auto params = init_policy(PolicyConfig::tiny(), 5);
  const auto mission = make_mission(generate_scenario(4, 2, Distribution::uniform, TeamConfig{}, 2), TeamConfig{});
  const Tensor inputs = encoder_inputs(*mission);
  Rng rng(4);
  std::vector<Action> actions;
  double lp0 = 0.0;
  std::vector<Tensor> grads = params.zeros_like();
  {
    Tape tape(true);
    PolicyGraph g(params, tape, inputs);
    const auto ep = run_episode(g, reset(mission), sampling_chooser(rng));
    actions = ep.actions;
    lp0 = ep.route.log_prob;
    // loss = advantage * log pi with a negative advantage.
    tape.backward(ep.log_prob, -1.0);
    tape.accumulate(grads);
  }
  auto stepped = params;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    for (std::size_t i = 0; i < grads[k].size(); ++i) stepped.tensors[k].values[i] -= 1e-3 * grads[k].values[i];
  }
  Tape tape(false);
  PolicyGraph g(stepped, tape, inputs);
  const double lp1 = run_episode(g, reset(mission), forced_chooser(*mission, actions)).route.log_prob;
  CHECK(lp1 > lp0);
}

TEST_CASE("training is deterministic and independent of the thread count") {
  const auto c = small_config();
  const auto init = init_policy(c.policy, 1);
  TrainHooks hooks;
  hooks.timing = false;
  omp_set_num_threads(1);
  const auto a = train(c, init, 11, hooks);
  omp_set_num_threads(3);
  const auto b = train(c, init, 11, hooks);
  omp_set_num_threads(1);
  CHECK(a.policy == b.policy);
  CHECK(a.baseline == b.baseline);
  CHECK(batch_log_csv(a.batches) == batch_log_csv(b.batches));
  CHECK(a.batches.size() == 4);
  CHECK(a.history.size() == 2);
  CHECK(!(a.policy == init));
  const auto other = train(c, init, 12, hooks);
  CHECK(!(other.policy == a.policy));
}

TEST_CASE("baseline changes only through a full copy when the test fires") {
  auto c = small_config();
  c.epochs = 4;
  c.significance = 0.5;
  const auto init = init_policy(c.policy, 2);
  PolicyParams last_baseline = init;
  int swaps = 0, checked = 0;
  TrainHooks hooks;
  hooks.timing = false;
  hooks.on_epoch = [&](const EpochRecord& e, const TrainState& st) {
    ++checked;
    CHECK(e.baseline_swapped == (e.p_value < c.significance));
    if (e.baseline_swapped) {
      ++swaps;
      CHECK(st.baseline == st.policy);
    } else {
      CHECK(st.baseline == last_baseline);
    }
    last_baseline = st.baseline;
  };
  train(c, init, 3, hooks);
  CHECK(checked == 4);
  MESSAGE("baseline swaps: " << swaps);
}

TEST_CASE("per-epoch checkpoints restore the training state") {
  auto c = small_config();
  const auto dir = std::filesystem::temp_directory_path() / "coroute_train_ckpt";
  std::filesystem::remove_all(dir);
  TrainHooks hooks;
  hooks.timing = false;
  hooks.checkpoint_dir = dir;
  const auto st = train(c, init_policy(c.policy, 4), 5, hooks);
  REQUIRE(std::filesystem::exists(dir / "epoch_000.ckpt"));
  REQUIRE(std::filesystem::exists(dir / "epoch_001.ckpt"));
  const auto ck = load_checkpoint(dir / "epoch_001.ckpt");
  CHECK(policy_from_checkpoint(ck) == st.policy);
  CHECK(policy_from_checkpoint(ck, "baseline/") == st.baseline);
  CHECK(ck.extract("adam.m/", st.policy.names) == st.optimizer.m);
  CHECK(ck.meta.at("epoch") == "2");
  std::filesystem::remove_all(dir);
}

TEST_CASE("batch log columns") {
  auto c = small_config();
  c.epochs = 1;
  TrainHooks hooks;
  hooks.timing = false;
  const auto st = train(c, init_policy(c.policy, 6), 1, hooks);
  const std::string csv = batch_log_csv(st.batches);
  CHECK(csv.rfind("epoch,batch,mean_return_min,failure_rate,lr,p_value,wall_ms\n", 0) == 0);
  CHECK(st.batches[0].p_value < 0);
  CHECK(st.batches[1].p_value >= 0);
  CHECK(st.batches[1].lr == 1e-4);
}

TEST_CASE("non-finite parameters abort training with a diagnostic") {
  auto c = small_config();
  auto init = init_policy(c.policy, 7);
  init["uav.Wq"].values[0] = std::numeric_limits<Real>::quiet_NaN();
  try {
    train(c, init, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::non_finite);
  }
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.decay = 1.5;
  CHECK_THROWS_AS(train(c, init_policy(c.policy, 1), 1), Error);
  c = small_config();
  CHECK_THROWS_AS(train(c, init_policy(PolicyConfig::desk(), 1), 1), Error);
}
