#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "coroute/checkpoint.hpp"
#include "coroute/env.hpp"
#include "coroute/policy.hpp"
#include "coroute/scenario.hpp"

namespace coroute {

/// Instance distribution used for training and held-out evaluation.
struct ProblemSpec {
  int aerial = 8;
  int ground = 3;
  Distribution distribution = Distribution::uniform;
  TeamConfig team;
  GenerationParams generation;

  Scenario generate(std::uint64_t seed) const;
  bool operator==(const ProblemSpec&) const = default;
};

struct TrainConfig {
  int epochs = 100;
  int batches_per_epoch = 200;
  int batch_size = 256;
  double lr0 = 1e-4;
  double decay = 0.995;
  double significance = 0.05;
  /// Batches at the end of each epoch whose instances feed the t-test
  /// (0 = every batch of the epoch).
  int ttest_batches = 0;
  int horizon = 0;  ///< 0 = environment default
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  SelectionMode selection = SelectionMode::sortie_wise;
  ProblemSpec problem;
  PolicyConfig policy;

  /// E=100, N=200, B=256, d_h=128 on U15G5.
  static TrainConfig paper();
  /// E=10, N=20, B=32, d_h=32 on 8 aerial + 3 ground, 1 UAV - 1 UGV.
  static TrainConfig desk();
  void validate() const;
};

double lr_at_epoch(double lr0, double alpha, int epoch);

/// One-sided paired t-test of H1 "policy returns are lower". Differences are
/// d = baseline - policy; p = 1 - CDF_t(mean(d) / (sd(d) / sqrt(n)), n - 1).
/// Zero spread gives p = 1 when mean(d) <= 0, else p = 0.
double paired_t_test(const std::vector<double>& policy_returns, const std::vector<double>& baseline_returns);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long long step = 0;
};

AdamState adam_init(const PolicyParams& params);
/// One bias-corrected Adam update in place.
void adam_step(PolicyParams& params, const std::vector<Tensor>& grads, AdamState& state, double lr, double beta1,
               double beta2, double epsilon);

struct BatchRecord {
  int epoch = 0;
  int batch = 0;
  double mean_return_min = 0.0;  ///< sampled rollouts under the policy
  double failure_rate = 0.0;
  double lr = 0.0;
  double p_value = -1.0;  ///< set on the last batch of an epoch; -1 otherwise
  double wall_ms = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_return_min = 0.0;
  double failure_rate = 0.0;
  double lr = 0.0;
  double p_value = 1.0;
  bool baseline_swapped = false;
};

struct TrainState {
  PolicyParams policy;
  PolicyParams baseline;
  AdamState optimizer;
  int epoch = 0;  ///< completed epochs
  std::vector<EpochRecord> history;
  std::vector<BatchRecord> batches;
};

struct TrainHooks {
  /// Directory for per-epoch checkpoints (empty = none).
  std::filesystem::path checkpoint_dir;
  /// Record wall time in the batch log (off for byte-identical logs).
  bool timing = true;
  std::function<void(const BatchRecord&)> on_batch;
  std::function<void(const EpochRecord&, const TrainState&)> on_epoch;
};

/// REINFORCE with a greedy-rollout baseline. Per batch: B fresh instances,
/// one sampled rollout under the policy and one greedy rollout under the
/// baseline per instance, gradient (1/B) sum (R - R_base) grad log pi with
/// returns in hours, one Adam step. Per epoch: t-test of the greedy policy
/// against the stored baseline returns, baseline <- policy if p < alpha,
/// learning-rate decay. Batch members run in parallel; their gradients are
/// summed in member order, so results do not depend on the thread count.
TrainState train(const TrainConfig& config, const PolicyParams& initial, std::uint64_t seed,
                 const TrainHooks& hooks = {});

/// Checkpoint holding policy, baseline and optimizer moments.
Checkpoint training_checkpoint(const TrainState& state, const TrainConfig& config, std::uint64_t seed);

std::string batch_log_csv(const std::vector<BatchRecord>& rows);

}  // namespace coroute
