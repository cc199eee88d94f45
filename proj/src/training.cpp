#include "coroute/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "coroute/error.hpp"
#include "coroute/rng.hpp"
#include "coroute/rollout.hpp"

namespace coroute {

Scenario ProblemSpec::generate(std::uint64_t seed) const {
  return generate_scenario(aerial, ground, distribution, team, seed, generation);
}

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.problem.aerial = 15;
  c.problem.ground = 5;
  c.policy = PolicyConfig::paper();
  return c;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.epochs = 10;
  c.batches_per_epoch = 20;
  c.batch_size = 32;
  c.policy = PolicyConfig::desk();
  return c;
}

void TrainConfig::validate() const {
  require(epochs >= 0 && batches_per_epoch >= 1 && batch_size >= 2, ErrorKind::invalid_argument,
          "need epochs >= 0, at least one batch per epoch and batch size >= 2");
  require(lr0 > 0 && decay > 0 && decay <= 1, ErrorKind::invalid_argument, "need lr0 > 0 and 0 < decay <= 1");
  require(significance > 0 && significance < 1, ErrorKind::invalid_argument, "significance must lie in (0, 1)");
  require(ttest_batches >= 0 && ttest_batches <= batches_per_epoch, ErrorKind::invalid_argument,
          "t-test batch count out of range");
  require(selection != SelectionMode::scripted, ErrorKind::invalid_argument, "training needs an agent selection rule");
  policy.validate();
}

double lr_at_epoch(double lr0, double alpha, int epoch) {
  require(epoch >= 0, ErrorKind::invalid_argument, "epoch must be non-negative");
  return lr0 * std::pow(alpha, epoch);
}

double paired_t_test(const std::vector<double>& policy, const std::vector<double>& baseline) {
  require(policy.size() == baseline.size(), ErrorKind::contract_violation,
          "paired t-test needs equal-length samples (" + std::to_string(policy.size()) + " vs " +
              std::to_string(baseline.size()) + ")");
  require(policy.size() >= 2, ErrorKind::contract_violation, "paired t-test needs at least two pairs");
  const double n = static_cast<double>(policy.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < policy.size(); ++i) mean += baseline[i] - policy[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    const double d = baseline[i] - policy[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1));
  if (sd == 0.0) return mean <= 0.0 ? 1.0 : 0.0;
  const double t = mean / (sd / std::sqrt(n));
  const double nu = n - 1;
  // Upper tail of Student's t through the regularized incomplete beta.
  const double tail = 0.5 * boost::math::ibeta(nu / 2, 0.5, nu / (nu + t * t));
  return t > 0 ? tail : 1.0 - tail;
}

AdamState adam_init(const PolicyParams& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(PolicyParams& params, const std::vector<Tensor>& grads, AdamState& s, double lr, double beta1,
               double beta2, double epsilon) {
  ++s.step;
  const double c1 = 1 - std::pow(beta1, static_cast<double>(s.step));
  const double c2 = 1 - std::pow(beta2, static_cast<double>(s.step));
  for (std::size_t k = 0; k < params.tensors.size(); ++k) {
    auto& w = params.tensors[k].values;
    auto& m = s.m[k].values;
    auto& v = s.v[k].values;
    const auto& g = grads[k].values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = static_cast<Real>(beta1 * m[i] + (1 - beta1) * g[i]);
      v[i] = static_cast<Real>(beta2 * v[i] + (1 - beta2) * g[i] * g[i]);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] = static_cast<Real>(w[i] - lr * mhat / (std::sqrt(vhat) + epsilon));
    }
  }
}

namespace {

constexpr double kHour = 3600.0;

struct Member {
  double sample_return = 0.0;
  double baseline_return = 0.0;
  bool failed = false;
  std::vector<Tensor> grads;
};

std::uint64_t instance_seed(std::uint64_t seed, int epoch, int batch, int b) {
  return Rng::mix(Rng::mix(seed, 1), static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batch),
                  static_cast<std::uint64_t>(b));
}

std::uint64_t sampling_seed(std::uint64_t seed, int epoch, int batch, int b) {
  return Rng::mix(Rng::mix(seed, 2), static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batch),
                  static_cast<std::uint64_t>(b));
}

MissionPtr training_mission(const TrainConfig& c, std::uint64_t seed) {
  MissionOptions opts;
  opts.selection = c.selection;
  opts.horizon = c.horizon;
  return make_mission(c.problem.generate(seed), c.problem.team, opts);
}

double greedy_return(const PolicyParams& params, const MissionPtr& mission) {
  return rollout_from(reset(mission), params, DecodePolicy::greedy()).best_return();
}

void check_finite(const std::vector<Tensor>& grads, const PolicyParams& params, int epoch, int batch) {
  for (std::size_t k = 0; k < grads.size(); ++k) {
    for (Real v : grads[k].values) {
      require(std::isfinite(v), ErrorKind::non_finite,
              "non-finite gradient in " + params.names[k] + " at epoch " + std::to_string(epoch) + ", batch " +
                  std::to_string(batch));
    }
  }
}

}  // namespace

TrainState train(const TrainConfig& c, const PolicyParams& initial, std::uint64_t seed, const TrainHooks& hooks) {
  c.validate();
  require(initial.config == c.policy, ErrorKind::invalid_argument, "initial parameters do not match the policy config");
  TrainState st;
  st.policy = initial;
  st.baseline = initial;
  st.optimizer = adam_init(initial);
  if (!hooks.checkpoint_dir.empty()) std::filesystem::create_directories(hooks.checkpoint_dir);

  const int B = c.batch_size;
  const int first_test_batch = c.batches_per_epoch - (c.ttest_batches == 0 ? c.batches_per_epoch : c.ttest_batches);
  for (int epoch = 0; epoch < c.epochs; ++epoch) {
    const double lr = lr_at_epoch(c.lr0, c.decay, epoch);
    std::vector<double> baseline_returns;
    std::vector<std::uint64_t> test_instances;
    double epoch_return = 0.0, epoch_failures = 0.0;
    for (int batch = 0; batch < c.batches_per_epoch; ++batch) {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<Member> members(static_cast<std::size_t>(B));
      std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
      for (int b = 0; b < B; ++b) {
        try {
          Member& mb = members[static_cast<std::size_t>(b)];
          const MissionPtr mission = training_mission(c, instance_seed(seed, epoch, batch, b));
          mb.baseline_return = greedy_return(st.baseline, mission);
          Tape tape(true);
          PolicyGraph graph(st.policy, tape, encoder_inputs(*mission));
          Rng rng(sampling_seed(seed, epoch, batch, b));
          const Episode ep = run_episode(graph, reset(mission), sampling_chooser(rng));
          mb.sample_return = ep.route.return_s;
          mb.failed = ep.route.status != Status::success;
          const double advantage = (mb.sample_return - mb.baseline_return) / kHour;
          mb.grads = st.policy.zeros_like();
          if (advantage != 0.0) {
            tape.backward(ep.log_prob, static_cast<Real>(advantage / B));
            tape.accumulate(mb.grads);
          }
        } catch (...) {
#pragma omp critical(coroute_train_error)
          if (!error) error = std::current_exception();
        }
      }
      if (error) std::rethrow_exception(error);

      // Fixed reduction order: member 0, 1, ..., B-1.
      std::vector<Tensor> grads = st.policy.zeros_like();
      BatchRecord rec;
      rec.epoch = epoch;
      rec.batch = batch;
      rec.lr = lr;
      for (int b = 0; b < B; ++b) {
        const Member& mb = members[static_cast<std::size_t>(b)];
        for (std::size_t k = 0; k < grads.size(); ++k) {
          auto& g = grads[k].values;
          const auto& src = mb.grads[k].values;
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
        }
        rec.mean_return_min += mb.sample_return / 60.0 / B;
        rec.failure_rate += (mb.failed ? 1.0 : 0.0) / B;
        if (batch >= first_test_batch) {
          baseline_returns.push_back(mb.baseline_return);
          test_instances.push_back(instance_seed(seed, epoch, batch, b));
        }
      }
      check_finite(grads, st.policy, epoch, batch);
      adam_step(st.policy, grads, st.optimizer, lr, c.beta1, c.beta2, c.epsilon);
      epoch_return += rec.mean_return_min / c.batches_per_epoch;
      epoch_failures += rec.failure_rate / c.batches_per_epoch;

      EpochRecord er;
      if (batch + 1 == c.batches_per_epoch) {
        // Greedy policy against the stored greedy baseline on the same instances.
        std::vector<double> policy_returns(test_instances.size());
        std::exception_ptr test_error;
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < static_cast<int>(test_instances.size()); ++i) {
          try {
            policy_returns[static_cast<std::size_t>(i)] =
                greedy_return(st.policy, training_mission(c, test_instances[static_cast<std::size_t>(i)]));
          } catch (...) {
#pragma omp critical(coroute_train_error)
            if (!test_error) test_error = std::current_exception();
          }
        }
        if (test_error) std::rethrow_exception(test_error);
        er.epoch = epoch;
        er.mean_return_min = epoch_return;
        er.failure_rate = epoch_failures;
        er.lr = lr;
        er.p_value = paired_t_test(policy_returns, baseline_returns);
        er.baseline_swapped = er.p_value < c.significance;
        if (er.baseline_swapped) st.baseline = st.policy;
        rec.p_value = er.p_value;
      }
      if (hooks.timing) {
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      }
      st.batches.push_back(rec);
      if (hooks.on_batch) hooks.on_batch(rec);
      if (batch + 1 == c.batches_per_epoch) {
        st.history.push_back(er);
        st.epoch = epoch + 1;
        if (!hooks.checkpoint_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
          save_checkpoint(training_checkpoint(st, c, seed), hooks.checkpoint_dir / name);
        }
        if (hooks.on_epoch) hooks.on_epoch(er, st);
      }
    }
  }
  return st;
}

Checkpoint training_checkpoint(const TrainState& st, const TrainConfig& c, std::uint64_t seed) {
  Checkpoint ck = make_checkpoint(st.policy);
  ck.add("baseline/", st.baseline.names, st.baseline.tensors);
  ck.add("adam.m/", st.policy.names, st.optimizer.m);
  ck.add("adam.v/", st.policy.names, st.optimizer.v);
  ck.meta["epoch"] = std::to_string(st.epoch);
  ck.meta["adam_step"] = std::to_string(st.optimizer.step);
  ck.meta["seed"] = std::to_string(seed);
  ck.meta["selection"] = to_string(c.selection);
  ck.meta["problem"] = std::to_string(c.problem.aerial) + "a" + std::to_string(c.problem.ground) + "g/" +
                       std::to_string(c.problem.team.num_uavs) + "u" + std::to_string(c.problem.team.num_ugvs) + "g";
  return ck;
}

std::string batch_log_csv(const std::vector<BatchRecord>& rows) {
  std::ostringstream out;
  out << "epoch,batch,mean_return_min,failure_rate,lr,p_value,wall_ms\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.9g,", r.epoch, r.batch, r.mean_return_min, r.failure_rate, r.lr);
    out << buf;
    if (r.p_value >= 0) {
      std::snprintf(buf, sizeof(buf), "%.9g", r.p_value);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.3f\n", r.wall_ms);
    out << buf;
  }
  return out.str();
}

}  // namespace coroute
