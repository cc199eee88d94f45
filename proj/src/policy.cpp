#include "coroute/policy.hpp"

#include <algorithm>
#include <cmath>

#include "coroute/error.hpp"
#include "coroute/rng.hpp"
#include "coroute/rollout.hpp"

namespace coroute {

PolicyConfig PolicyConfig::desk() { return {}; }

PolicyConfig PolicyConfig::paper() {
  PolicyConfig c;
  c.d_h = 128;
  c.heads = 8;
  c.layers = 3;
  c.d_ff = 512;
  return c;
}

PolicyConfig PolicyConfig::tiny() {
  PolicyConfig c;
  c.d_h = 8;
  c.heads = 2;
  c.layers = 1;
  c.d_ff = 32;
  return c;
}

void PolicyConfig::validate() const {
  require(d_h > 0 && heads > 0 && d_h % heads == 0, ErrorKind::invalid_argument,
          "d_h must be a positive multiple of the head count");
  require(layers >= 0 && d_ff > 0, ErrorKind::invalid_argument, "layers >= 0 and d_ff > 0 required");
  require(clip > 0 && time_norm_s > 0 && norm_eps > 0, ErrorKind::invalid_argument,
          "clip, time normalizer and norm epsilon must be positive");
}

std::vector<std::string> parameter_names(const PolicyConfig& c) {
  std::vector<std::string> names{"embed.W", "embed.b"};
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "enc" + std::to_string(l) + ".";
    for (const char* s : {"Wq", "Wk", "Wv", "norm1.scale", "norm1.shift", "ff.W1", "ff.b1", "ff.W2", "ff.b2",
                          "norm2.scale", "norm2.shift"}) {
      names.push_back(p + s);
    }
  }
  for (const char* s : {"uav.Wg", "uav.Wc", "uav.glimpse.Wk", "uav.glimpse.Wv", "uav.Wq", "uav.Wk",
                        "uav.Wk_recharge", "ugv.Wlt", "ugv.Wt", "ugv.Wc"}) {
    names.emplace_back(s);
  }
  return names;
}

int PolicyParams::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  fail(ErrorKind::invalid_argument, "no parameter named " + std::string(name));
}

std::size_t PolicyParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

std::vector<Tensor> PolicyParams::zeros_like() const {
  std::vector<Tensor> out;
  out.reserve(tensors.size());
  for (const auto& t : tensors) out.emplace_back(t.shape, std::vector<Real>(t.size(), 0));
  return out;
}

namespace {

struct Shape {
  int rows, cols, fan_in;
  enum { random, ones, zeros } fill;
};

Shape shape_of(const std::string& name, const PolicyConfig& c) {
  const int d = c.d_h;
  auto ends = [&](const char* s) { return name.ends_with(s); };
  if (name == "embed.W") return {3, d, 3, Shape::random};
  if (name == "embed.b") return {1, d, 3, Shape::random};
  if (ends(".scale")) return {1, d, d, Shape::ones};
  if (ends(".shift")) return {1, d, d, Shape::zeros};
  if (ends("ff.W1")) return {d, c.d_ff, d, Shape::random};
  if (ends("ff.b1")) return {1, c.d_ff, d, Shape::random};
  if (ends("ff.W2")) return {c.d_ff, d, c.d_ff, Shape::random};
  if (ends("ff.b2")) return {1, d, c.d_ff, Shape::random};
  if (name == "uav.Wg" || name == "uav.Wc") return {d + 1, d, d + 1, Shape::random};
  if (name == "ugv.Wlt" || name == "ugv.Wt") return {1, d, 1, Shape::random};
  if (name == "ugv.Wc") return {2 * d, d, 2 * d, Shape::random};
  return {d, d, d, Shape::random};
}

}  // namespace

PolicyParams init_policy(const PolicyConfig& config, std::uint64_t seed) {
  config.validate();
  PolicyParams p;
  p.config = config;
  p.names = parameter_names(config);
  Rng rng(seed);
  for (const auto& name : p.names) {
    const Shape s = shape_of(name, config);
    Tensor t(s.rows, s.cols);
    if (s.fill == Shape::ones) {
      std::fill(t.values.begin(), t.values.end(), Real(1));
    } else if (s.fill == Shape::random) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
      for (auto& v : t.values) v = static_cast<Real>(rng.uniform(-bound, bound));
    }
    p.tensors.push_back(std::move(t));
  }
  return p;
}

Tensor encoder_inputs(const Mission& mission) {
  const double side = mission.scenario().area_side_m;
  Tensor x(mission.num_nodes(), 3);
  for (int i = 0; i < mission.num_nodes(); ++i) {
    const Point pt = mission.node_point(i);
    x.at(i, 0) = static_cast<Real>(pt.x / side);
    x.at(i, 1) = static_cast<Real>(pt.y / side);
    x.at(i, 2) = mission.is_ground(i) ? 1 : 0;
  }
  return x;
}

PolicyGraph::PolicyGraph(const PolicyParams& params, Tape& tape) : params_(&params), tape_(&tape) {
  params.config.validate();
  require(params.names == parameter_names(params.config), ErrorKind::invalid_argument,
          "parameter set does not match its configuration");
  bind();
}

PolicyGraph::PolicyGraph(const PolicyParams& params, Tape& tape, const Tensor& inputs) : PolicyGraph(params, tape) {
  encode(inputs);
  prepare_decoder();
}

PolicyGraph PolicyGraph::from_embeddings(const PolicyParams& params, Tape& tape, const Tensor& embeddings) {
  PolicyGraph g(params, tape);
  require(embeddings.cols() == params.config.d_h, ErrorKind::invalid_argument, "embedding width mismatch");
  g.n_ = embeddings.rows();
  g.h_ = tape.constant(embeddings);
  g.prepare_decoder();
  return g;
}

void PolicyGraph::bind() {
  leaves_.clear();
  for (std::size_t i = 0; i < params_->tensors.size(); ++i) {
    leaves_.push_back(tape_->parameter(params_->tensors[i], static_cast<int>(i)));
  }
}

Var PolicyGraph::attention(Var q, Var k, Var v, int heads) {
  Tape& t = *tape_;
  const int dk = t.value(q).cols() / heads;
  const Real scale = 1 / std::sqrt(static_cast<Real>(dk));
  std::vector<Var> z;
  for (int j = 0; j < heads; ++j) {
    const Var qj = t.slice_cols(q, j * dk, (j + 1) * dk);
    const Var kj = t.slice_cols(k, j * dk, (j + 1) * dk);
    const Var vj = t.slice_cols(v, j * dk, (j + 1) * dk);
    const Var a = t.softmax_rows(t.scale(t.matmul_nt(qj, kj), scale));
    z.push_back(t.matmul(a, vj));
  }
  return heads == 1 ? z[0] : t.concat_cols(z);
}

void PolicyGraph::encode(const Tensor& inputs) {
  const PolicyConfig& c = params_->config;
  require(inputs.cols() == 3 && inputs.rows() >= 1, ErrorKind::invalid_argument, "encoder inputs must be n x 3");
  for (Real v : inputs.values) require(std::isfinite(v), ErrorKind::invalid_argument, "non-finite encoder input");
  Tape& t = *tape_;
  n_ = inputs.rows();
  Var h = t.add(t.matmul(t.constant(inputs), p("embed.W")), p("embed.b"));
  for (int l = 0; l < c.layers; ++l) {
    const std::string pre = "enc" + std::to_string(l) + ".";
    const Var mha = attention(t.matmul(h, p(pre + "Wq")), t.matmul(h, p(pre + "Wk")), t.matmul(h, p(pre + "Wv")),
                              c.heads);
    const Var hhat = t.instance_norm(t.add(h, mha), p(pre + "norm1.scale"), p(pre + "norm1.shift"), c.norm_eps);
    const Var hidden = t.relu(t.add(t.matmul(t.relu(hhat), p(pre + "ff.W1")), p(pre + "ff.b1")));
    const Var ff = t.add(t.matmul(hidden, p(pre + "ff.W2")), p(pre + "ff.b2"));
    h = t.instance_norm(t.add(hhat, ff), p(pre + "norm2.scale"), p(pre + "norm2.shift"), c.norm_eps);
  }
  h_ = h;
}

void PolicyGraph::prepare_decoder() {
  Tape& t = *tape_;
  h_mean_ = t.mean_rows(h_);
  glimpse_k_ = t.matmul(h_, p("uav.glimpse.Wk"));
  glimpse_v_ = t.matmul(h_, p("uav.glimpse.Wv"));
  key_visit_ = t.matmul(h_, p("uav.Wk"));
  key_recharge_ = t.matmul(h_, p("uav.Wk_recharge"));
}

Var PolicyGraph::uav_logits(const MissionState& s) {
  require(s.active && s.active->kind == AgentKind::uav, ErrorKind::contract_violation,
          "uav_logits needs an active UAV");
  const PolicyConfig& c = params_->config;
  const Mission& m = *s.mission;
  require(m.num_nodes() == n_, ErrorKind::contract_violation, "state belongs to a different mission");
  Tape& t = *tape_;
  const AgentState& u = s.agent(*s.active);

  // Mission status d_i: 1 for visited tasks and for the depot.
  Real done = 1;
  for (auto v : s.visited) done += v ? 1 : 0;
  const Var status = t.constant(Tensor::scalar(done / n_));
  const Var graph = t.matmul(t.concat_cols({h_mean_, status}), p("uav.Wg"));
  const Var fuel = t.constant(Tensor::scalar(static_cast<Real>(u.fuel_kj / m.scenario().fuel.capacity_kj)));
  const Var own = t.matmul(t.concat_cols({t.gather_rows(h_, {u.node}), fuel}), p("uav.Wc"));
  const Var context = t.add(graph, own);

  const Var glimpse = attention(context, glimpse_k_, glimpse_v_, c.heads);
  const Var q = t.matmul(glimpse, p("uav.Wq"));
  const Real inv = 1 / std::sqrt(static_cast<Real>(c.head_dim()));
  const Var visit = t.scale(t.tanh(t.scale(t.matmul_nt(q, key_visit_), inv)), c.clip);
  const Var recharge = t.scale(t.tanh(t.scale(t.matmul_nt(q, key_recharge_), inv)), c.clip);
  return t.concat_cols({visit, recharge});
}

Var PolicyGraph::ugv_logits(const MissionState& s, const ActionMask& mask) {
  require(s.active && s.active->kind == AgentKind::ugv, ErrorKind::contract_violation,
          "ugv_logits needs an active UGV");
  const PolicyConfig& c = params_->config;
  const Mission& m = *s.mission;
  require(m.num_nodes() == n_, ErrorKind::contract_violation, "state belongs to a different mission");
  Tape& t = *tape_;
  const AgentState& g = s.agent(*s.active);

  std::vector<int> nodes;
  std::vector<Real> landing;
  for (int node = 0; node < n_; ++node) {
    if (!mask[static_cast<std::size_t>(n_ + node)]) continue;
    double when = -1;
    for (const auto& u : s.uavs) {
      if (u.landed_at && u.landed_at->node == node && (when < 0 || u.landed_at->time_s < when)) {
        when = u.landed_at->time_s;
      }
    }
    require(when >= 0, ErrorKind::contract_violation, "recharge node without a landed UAV");
    nodes.push_back(node);
    landing.push_back(static_cast<Real>(when / c.time_norm_s));
  }
  require(!nodes.empty(), ErrorKind::contract_violation, to_string(*s.active) + " has no landed UAV to serve");

  const Var lt = t.leaky_relu(t.matmul(t.constant(Tensor::column(landing)), p("ugv.Wlt")), c.leaky_slope);
  const Var now = t.constant(Tensor::scalar(static_cast<Real>(g.clock_s / c.time_norm_s)));
  const Var own = t.relu(t.matmul(now, p("ugv.Wt")));
  const Var time = t.add(lt, own);
  const Var context = t.relu(t.matmul(t.concat_cols({t.gather_rows(h_, nodes), time}), p("ugv.Wc")));
  // n x k scores, pooled over the assigned UAVs.
  const Var pooled = t.mean_cols(t.matmul_nt(h_, context));
  const Var scores = t.scale(t.transpose(pooled), 1 / std::sqrt(static_cast<Real>(c.d_h)));
  return t.concat_cols({t.constant(Tensor(1, n_)), scores});
}

Var PolicyGraph::log_probs(const MissionState& s, const ActionMask& mask) {
  require(s.active.has_value(), ErrorKind::contract_violation, "no active agent");
  const Var logits = s.active->kind == AgentKind::uav ? uav_logits(s) : ugv_logits(s, mask);
  return tape_->masked_log_softmax(logits, mask);
}

Tensor encoder_forward(const Tensor& inputs, const PolicyParams& params) {
  Tape tape(false);
  PolicyGraph g(params, tape, inputs);
  return tape.value(g.embeddings());
}

namespace {

DecodeOutput decode(const MissionState& s, const Tensor& emb, const PolicyParams& params, const ActionMask& mask,
                    AgentKind kind) {
  require(s.active && s.active->kind == kind, ErrorKind::contract_violation, "active agent kind mismatch");
  require(std::any_of(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; }),
          ErrorKind::contract_violation, "every action is masked");
  Tape tape(false);
  auto g = PolicyGraph::from_embeddings(params, tape, emb);
  const Var logits = kind == AgentKind::uav ? g.uav_logits(s) : g.ugv_logits(s, mask);
  const Var lp = tape.masked_log_softmax(logits, mask);
  DecodeOutput out;
  out.logits = tape.value(logits).values;
  for (Real v : tape.value(lp).values) out.probabilities.push_back(std::isfinite(v) ? std::exp(v) : Real(0));
  return out;
}

}  // namespace

DecodeOutput decode_step_uav(const MissionState& s, const Tensor& emb, const PolicyParams& params,
                             const ActionMask& mask) {
  return decode(s, emb, params, mask, AgentKind::uav);
}

DecodeOutput decode_step_ugv(const MissionState& s, const Tensor& emb, const PolicyParams& params,
                             const ActionMask& mask) {
  return decode(s, emb, params, mask, AgentKind::ugv);
}

GradientCheckReport gradient_check(const PolicyConfig& config, std::uint64_t seed, double h, double floor) {
  require(sizeof(Real) == 8, ErrorKind::contract_violation, "gradient check needs 64-bit reals");
  PolicyParams params = init_policy(config, seed);
  const TeamConfig team{2, 1, 10.0, 4.5, 300.0};
  const Scenario scenario = generate_scenario(2, 2, Distribution::uniform, team, seed);
  const MissionPtr mission = make_mission(scenario, team);
  const Tensor inputs = encoder_inputs(*mission);

  std::vector<Action> actions;
  {
    Tape tape(false);
    PolicyGraph g(params, tape, inputs);
    actions = run_episode(g, reset(mission), greedy_chooser()).actions;
  }
  auto loss = [&](Tape& tape) {
    PolicyGraph g(params, tape, inputs);
    const Var lp = run_episode(g, reset(mission), forced_chooser(*mission, actions)).log_prob;
    return lp;
  };

  Tape tape(true);
  const Var lp = loss(tape);
  tape.backward(lp);
  auto grads = params.zeros_like();
  tape.accumulate(grads);

  GradientCheckReport report;
  report.trajectory_length = static_cast<int>(actions.size());
  report.max_relative_error = -1;
  for (std::size_t k = 0; k < params.tensors.size(); ++k) {
    Tensor& w = params.tensors[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Real keep = w.values[i];
      w.values[i] = keep + h;
      Tape up(false);
      const double f_up = up.value(loss(up)).item();
      w.values[i] = keep - h;
      Tape down(false);
      const double f_down = down.value(loss(down)).item();
      w.values[i] = keep;
      const double numeric = (f_up - f_down) / (2 * h);
      const double analytic = grads[k].values[i];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++report.entries;
      if (rel > report.max_relative_error) {
        const int cols = w.cols();
        report.max_relative_error = rel;
        report.worst_parameter = params.names[k] + "[" + std::to_string(i / cols) + "," +
                                 std::to_string(i % cols) + "]";
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace coroute
