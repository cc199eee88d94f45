#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "coroute/kernels.hpp"

namespace coroute {

/// Dense row-major tensor. The policy only needs rank 2 (vectors are 1 x n),
/// but the shape list is kept general for the checkpoint format.
struct Tensor {
  std::vector<int> shape;
  std::vector<Real> values;

  Tensor() = default;
  Tensor(int rows, int cols, Real fill = 0);
  Tensor(std::vector<int> shape, std::vector<Real> values);

  static Tensor row(std::vector<Real> v);
  static Tensor column(std::vector<Real> v);
  static Tensor scalar(Real v) { return Tensor(1, 1, v); }

  int rows() const { return shape.size() < 2 ? 1 : shape[0]; }
  int cols() const { return shape.empty() ? 0 : shape.back(); }
  std::size_t size() const { return values.size(); }

  Real& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols() + c]; }
  Real at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols() + c]; }
  Real item() const { return values.at(0); }

  bool operator==(const Tensor&) const = default;
};

std::string shape_string(const std::vector<int>& shape);

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over a linear record of ops.
/// Nodes are appended in evaluation order; backward walks them in reverse.
/// A tape built with record = false computes values only (inference).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor t);
  /// Trainable leaf; its gradient is reported under `slot`.
  Var parameter(const Tensor& t, int slot);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient after backward(); empty tensor if nothing flowed into v.
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }

  /// Runs the reverse pass from a 1 x 1 node, seeding d(out)/d(out) = seed.
  void backward(Var out, Real seed = 1);
  /// Adds parameter-leaf gradients into grads[slot] (shapes must match).
  void accumulate(std::vector<Tensor>& grads) const;

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  ///< a * b^T
  Var transpose(Var a);
  /// Elementwise sum; b may also be a single row broadcast over a's rows.
  Var add(Var a, Var b);
  Var scale(Var a, Real s);
  Var relu(Var a);
  Var leaky_relu(Var a, Real slope);
  Var tanh(Var a);
  Var softmax_rows(Var a);
  /// Row vector log-softmax restricted to mask != 0; masked entries are -inf.
  Var masked_log_softmax(Var logits, const std::vector<std::uint8_t>& mask);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int begin, int end);
  Var gather_rows(Var a, const std::vector<int>& rows);
  Var mean_rows(Var a);  ///< 1 x cols
  Var mean_cols(Var a);  ///< rows x 1
  /// Per-column normalization over the rows (nodes) of x, then gamma/beta.
  Var instance_norm(Var x, Var gamma, Var beta, Real eps);
  Var element(Var a, int r, int c);  ///< 1 x 1

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    int slot = -1;
    bool needs_grad = false;
    std::function<void(Tape&, int)> back;
  };

  Var push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> back);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  Tensor& grad_buffer(int id);

  bool record_ = true;
  std::vector<Node> nodes_;
};

}  // namespace coroute
