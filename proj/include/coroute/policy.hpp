#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "coroute/env.hpp"
#include "coroute/tensor.hpp"

namespace coroute {

struct PolicyConfig {
  int d_h = 32;
  int heads = 4;
  int layers = 2;
  int d_ff = 128;
  Real clip = 10;
  Real time_norm_s = 480 * 60;
  Real leaky_slope = 0.01;
  Real norm_eps = 1e-5;

  /// d_h=32, M=4, L=2: small enough to train on a laptop.
  static PolicyConfig desk();
  /// d_h=128, M=8, L=3.
  static PolicyConfig paper();
  /// d_h=8, M=2, L=1: the finite-difference test network.
  static PolicyConfig tiny();

  int head_dim() const { return d_h / heads; }
  void validate() const;
  bool operator==(const PolicyConfig&) const = default;
};

/// Named weight tensors plus the hyperparameters that shaped them.
/// Encoder head j of a layer owns columns [j*d_k, (j+1)*d_k) of Wq/Wk/Wv.
struct PolicyParams {
  PolicyConfig config;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  int index(std::string_view name) const;
  Tensor& operator[](std::string_view name) { return tensors[static_cast<std::size_t>(index(name))]; }
  const Tensor& operator[](std::string_view name) const { return tensors[static_cast<std::size_t>(index(name))]; }
  std::size_t scalar_count() const;
  std::vector<Tensor> zeros_like() const;

  bool operator==(const PolicyParams&) const = default;
};

/// Weights uniform in +-1/sqrt(fan_in); normalization scale 1, shift 0.
PolicyParams init_policy(const PolicyConfig& config, std::uint64_t seed);

/// Parameter names in storage order for a configuration.
std::vector<std::string> parameter_names(const PolicyConfig& config);

/// Encoder inputs, one row per node: (x / side, y / side, ground flag).
Tensor encoder_inputs(const Mission& mission);

/// Binds a parameter set onto a tape, runs the encoder once, and then
/// scores decisions for any state of that mission.
class PolicyGraph {
 public:
  PolicyGraph(const PolicyParams& params, Tape& tape, const Tensor& inputs);
  /// Decoder only, starting from precomputed node embeddings.
  static PolicyGraph from_embeddings(const PolicyParams& params, Tape& tape, const Tensor& embeddings);

  Tape& tape() { return *tape_; }
  const PolicyParams& params() const { return *params_; }
  Var embeddings() const { return h_; }
  int num_nodes() const { return n_; }

  /// Pre-mask logits over the full action vector for the active UAV; every
  /// entry lies in [-clip, clip].
  Var uav_logits(const MissionState& state);
  /// Pre-mask logits for the active UGV; only recharge entries whose node is
  /// enabled in `mask` carry information.
  Var ugv_logits(const MissionState& state, const ActionMask& mask);
  /// Log-probabilities over the full action vector for the active agent;
  /// masked entries are -inf.
  Var log_probs(const MissionState& state, const ActionMask& mask);

 private:
  PolicyGraph(const PolicyParams& params, Tape& tape);
  void bind();
  void encode(const Tensor& inputs);
  void prepare_decoder();
  Var p(std::string_view name) const { return leaves_[static_cast<std::size_t>(params_->index(name))]; }
  Var attention(Var q, Var k, Var v, int heads);

  const PolicyParams* params_ = nullptr;
  Tape* tape_ = nullptr;
  std::vector<Var> leaves_;
  int n_ = 0;
  Var h_, h_mean_, glimpse_k_, glimpse_v_, key_visit_, key_recharge_;
};

Tensor encoder_forward(const Tensor& inputs, const PolicyParams& params);

struct DecodeOutput {
  std::vector<Real> logits;         ///< pre-mask, full action vector
  std::vector<Real> probabilities;  ///< exactly 0 on masked entries
};

/// Single decision for the state's active UAV / UGV against a precomputed
/// encoding. The UGV variant throws contract_violation when the UGV has no
/// landed UAV to serve.
DecodeOutput decode_step_uav(const MissionState& state, const Tensor& embeddings, const PolicyParams& params,
                             const ActionMask& mask);
DecodeOutput decode_step_ugv(const MissionState& state, const Tensor& embeddings, const PolicyParams& params,
                             const ActionMask& mask);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;  ///< "name[r,c]"
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries = 0;
  int trajectory_length = 0;
};

/// Compares the tape gradient of sum(log pi) over a fixed greedy trajectory
/// with central differences, entry by entry over every parameter. Relative
/// error is |a - n| / max(|a|, |n|, floor).
GradientCheckReport gradient_check(const PolicyConfig& config, std::uint64_t seed, double h = 1e-6,
                                   double floor = 1e-3);

}  // namespace coroute
