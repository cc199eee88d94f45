#include "coroute/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coroute/error.hpp"

namespace coroute {

Tensor::Tensor(int rows, int cols, Real fill)
    : shape{rows, cols}, values(static_cast<std::size_t>(rows) * cols, fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<Real> v) : shape(std::move(s)), values(std::move(v)) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d >= 0, ErrorKind::invalid_argument, "negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  require(n == values.size(), ErrorKind::invalid_argument,
          "tensor shape " + shape_string(shape) + " does not match " + std::to_string(values.size()) + " values");
}

Tensor Tensor::row(std::vector<Real> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({1, n}, std::move(v));
}

Tensor Tensor::column(std::vector<Real> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({n, 1}, std::move(v));
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void check_shape(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  require(ok, ErrorKind::contract_violation,
          std::string(op) + ": incompatible shapes " + shape_string(a.shape) + " and " + shape_string(b.shape));
}

}  // namespace

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_ && needs_grad;
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.values.empty()) n.grad = Tensor(n.value.shape, std::vector<Real>(n.value.size(), 0));
  return n.grad;
}

Var Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Var Tape::parameter(const Tensor& t, int slot) {
  Node n;
  n.value = t;
  n.slot = slot;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var out, Real seed) {
  require(record_, ErrorKind::contract_violation, "backward on a tape that does not record");
  require(value(out).size() == 1, ErrorKind::contract_violation, "backward needs a scalar output");
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(out.id).values[0] = seed;
  for (int id = out.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.back && !n.grad.values.empty()) n.back(*this, id);
  }
}

void Tape::accumulate(std::vector<Tensor>& grads) const {
  for (const auto& n : nodes_) {
    if (n.slot < 0 || n.grad.values.empty()) continue;
    Tensor& g = grads.at(static_cast<std::size_t>(n.slot));
    require(g.shape == n.grad.shape, ErrorKind::contract_violation, "gradient buffer shape mismatch");
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] += n.grad.values[i];
  }
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_shape(A.cols() == B.rows(), "matmul", A, B);
  const int n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C(n, m);
  kernels::matmul(A.values.data(), B.values.data(), C.values.data(), n, k, m);
  return push(std::move(C), needs(a) || needs(b), [a, b, n, k, m](Tape& t, int self) {
    const Real* G = t.nodes_[self].grad.values.data();
    if (t.needs(a)) {
      kernels::matmul_nt(G, t.value(b).values.data(), t.grad_buffer(a.id).values.data(), n, m, k, true);
    }
    if (t.needs(b)) {
      kernels::matmul_tn(t.value(a).values.data(), G, t.grad_buffer(b.id).values.data(), n, k, m, true);
    }
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_shape(A.cols() == B.cols(), "matmul_nt", A, B);
  const int n = A.rows(), k = A.cols(), m = B.rows();
  Tensor C(n, m);
  kernels::matmul_nt(A.values.data(), B.values.data(), C.values.data(), n, k, m);
  return push(std::move(C), needs(a) || needs(b), [a, b, n, k, m](Tape& t, int self) {
    const Real* G = t.nodes_[self].grad.values.data();
    if (t.needs(a)) {
      kernels::matmul(G, t.value(b).values.data(), t.grad_buffer(a.id).values.data(), n, m, k, true);
    }
    if (t.needs(b)) {
      kernels::matmul_tn(G, t.value(a).values.data(), t.grad_buffer(b.id).values.data(), n, m, k, true);
    }
  });
}

Var Tape::transpose(Var a) {
  const Tensor& A = value(a);
  const int r = A.rows(), c = A.cols();
  Tensor T(c, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) T.at(j, i) = A.at(i, j);
  }
  return push(std::move(T), needs(a), [a, r, c](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& ga = t.grad_buffer(a.id);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) ga.at(i, j) += G.at(j, i);
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  const bool same = A.shape == B.shape;
  const bool broadcast = !same && B.rows() == 1 && B.cols() == A.cols();
  check_shape(same || broadcast, "add", A, B);
  Tensor C = A;
  const int r = A.rows(), c = A.cols();
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) C.at(i, j) += B.values[static_cast<std::size_t>(same ? i * c + j : j)];
  }
  return push(std::move(C), needs(a) || needs(b), [a, b, same, r, c](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    if (t.needs(a)) {
      Tensor& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < G.size(); ++i) ga.values[i] += G.values[i];
    }
    if (t.needs(b)) {
      Tensor& gb = t.grad_buffer(b.id);
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) gb.values[static_cast<std::size_t>(same ? i * c + j : j)] += G.at(i, j);
      }
    }
  });
}

Var Tape::scale(Var a, Real s) {
  Tensor C = value(a);
  for (auto& v : C.values) v *= s;
  return push(std::move(C), needs(a), [a, s](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) ga.values[i] += s * G.values[i];
  });
}

Var Tape::relu(Var a) { return leaky_relu(a, 0); }

Var Tape::leaky_relu(Var a, Real slope) {
  Tensor C = value(a);
  for (auto& v : C.values) v = v > 0 ? v : slope * v;
  return push(std::move(C), needs(a), [a, slope](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& X = t.value(a);
    Tensor& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) ga.values[i] += X.values[i] > 0 ? G.values[i] : slope * G.values[i];
  });
}

Var Tape::tanh(Var a) {
  Tensor C = value(a);
  for (auto& v : C.values) v = std::tanh(v);
  return push(std::move(C), needs(a), [a](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& Y = t.nodes_[self].value;
    Tensor& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) ga.values[i] += G.values[i] * (1 - Y.values[i] * Y.values[i]);
  });
}

Var Tape::softmax_rows(Var a) {
  Tensor Y = value(a);
  const int r = Y.rows(), c = Y.cols();
  for (int i = 0; i < r; ++i) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (int j = 0; j < c; ++j) mx = std::max(mx, Y.at(i, j));
    Real sum = 0;
    for (int j = 0; j < c; ++j) {
      Y.at(i, j) = std::exp(Y.at(i, j) - mx);
      sum += Y.at(i, j);
    }
    for (int j = 0; j < c; ++j) Y.at(i, j) /= sum;
  }
  return push(std::move(Y), needs(a), [a, r, c](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& Y = t.nodes_[self].value;
    Tensor& ga = t.grad_buffer(a.id);
    for (int i = 0; i < r; ++i) {
      Real dot = 0;
      for (int j = 0; j < c; ++j) dot += G.at(i, j) * Y.at(i, j);
      for (int j = 0; j < c; ++j) ga.at(i, j) += Y.at(i, j) * (G.at(i, j) - dot);
    }
  });
}

Var Tape::masked_log_softmax(Var logits, const std::vector<std::uint8_t>& mask) {
  const Tensor& X = value(logits);
  require(X.rows() == 1 && static_cast<std::size_t>(X.cols()) == mask.size(), ErrorKind::contract_violation,
          "masked_log_softmax: mask length " + std::to_string(mask.size()) + " vs logits " + shape_string(X.shape));
  Real mx = -std::numeric_limits<Real>::infinity();
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (!mask[j]) continue;
    require(std::isfinite(X.values[j]), ErrorKind::non_finite, "non-finite logit at action " + std::to_string(j));
    mx = std::max(mx, X.values[j]);
  }
  require(std::isfinite(mx), ErrorKind::contract_violation, "masked_log_softmax: every entry is masked");
  Real sum = 0;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) sum += std::exp(X.values[j] - mx);
  }
  const Real lse = mx + std::log(sum);
  Tensor Y = X;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    Y.values[j] = mask[j] ? X.values[j] - lse : -std::numeric_limits<Real>::infinity();
  }
  return push(std::move(Y), needs(logits), [logits, mask](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& Y = t.nodes_[self].value;
    Tensor& ga = t.grad_buffer(logits.id);
    Real total = 0;
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (mask[j]) total += G.values[j];
    }
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (mask[j]) ga.values[j] += G.values[j] - std::exp(Y.values[j]) * total;
    }
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), ErrorKind::contract_violation, "concat_cols: nothing to join");
  const int r = value(parts[0]).rows();
  int c = 0;
  bool grad = false;
  std::vector<int> offsets;
  for (Var p : parts) {
    check_shape(value(p).rows() == r, "concat_cols", value(parts[0]), value(p));
    offsets.push_back(c);
    c += value(p).cols();
    grad = grad || needs(p);
  }
  Tensor C(r, c);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = value(parts[k]);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < P.cols(); ++j) C.at(i, offsets[k] + j) = P.at(i, j);
    }
  }
  return push(std::move(C), grad, [parts, offsets, r](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (!t.needs(parts[k])) continue;
      Tensor& gp = t.grad_buffer(parts[k].id);
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < gp.cols(); ++j) gp.at(i, j) += G.at(i, offsets[k] + j);
      }
    }
  });
}

Var Tape::slice_cols(Var a, int begin, int end) {
  const Tensor& A = value(a);
  require(0 <= begin && begin <= end && end <= A.cols(), ErrorKind::contract_violation, "slice_cols out of range");
  const int r = A.rows();
  Tensor C(r, end - begin);
  for (int i = 0; i < r; ++i) {
    for (int j = begin; j < end; ++j) C.at(i, j - begin) = A.at(i, j);
  }
  return push(std::move(C), needs(a), [a, begin, end, r](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& ga = t.grad_buffer(a.id);
    for (int i = 0; i < r; ++i) {
      for (int j = begin; j < end; ++j) ga.at(i, j) += G.at(i, j - begin);
    }
  });
}

Var Tape::gather_rows(Var a, const std::vector<int>& rows) {
  const Tensor& A = value(a);
  const int c = A.cols();
  Tensor C(static_cast<int>(rows.size()), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < A.rows(), ErrorKind::contract_violation, "gather_rows out of range");
    for (int j = 0; j < c; ++j) C.at(static_cast<int>(i), j) = A.at(rows[i], j);
  }
  return push(std::move(C), needs(a), [a, rows, c](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int j = 0; j < c; ++j) ga.at(rows[i], j) += G.at(static_cast<int>(i), j);
    }
  });
}

Var Tape::mean_rows(Var a) {
  const Tensor& A = value(a);
  const int r = A.rows(), c = A.cols();
  Tensor C(1, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) C.values[j] += A.at(i, j);
  }
  for (auto& v : C.values) v /= r;
  return push(std::move(C), needs(a), [a, r, c](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& ga = t.grad_buffer(a.id);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) ga.at(i, j) += G.values[j] / r;
    }
  });
}

Var Tape::mean_cols(Var a) {
  const Tensor& A = value(a);
  const int r = A.rows(), c = A.cols();
  Tensor C(r, 1);
  for (int i = 0; i < r; ++i) {
    Real s = 0;
    for (int j = 0; j < c; ++j) s += A.at(i, j);
    C.values[i] = s / c;
  }
  return push(std::move(C), needs(a), [a, r, c](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& ga = t.grad_buffer(a.id);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) ga.at(i, j) += G.values[i] / c;
    }
  });
}

Var Tape::instance_norm(Var x, Var gamma, Var beta, Real eps) {
  const Tensor& X = value(x);
  const Tensor& g = value(gamma);
  const Tensor& b = value(beta);
  const int n = X.rows(), c = X.cols();
  require(g.size() == static_cast<std::size_t>(c) && b.size() == static_cast<std::size_t>(c),
          ErrorKind::contract_violation, "instance_norm: scale/shift width mismatch");
  Tensor xhat(n, c);
  std::vector<Real> inv(static_cast<std::size_t>(c));
  for (int j = 0; j < c; ++j) {
    Real mu = 0;
    for (int i = 0; i < n; ++i) mu += X.at(i, j);
    mu /= n;
    Real var = 0;
    for (int i = 0; i < n; ++i) var += (X.at(i, j) - mu) * (X.at(i, j) - mu);
    var /= n;
    inv[j] = 1 / std::sqrt(var + eps);
    for (int i = 0; i < n; ++i) xhat.at(i, j) = (X.at(i, j) - mu) * inv[j];
  }
  Tensor Y(n, c);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) Y.at(i, j) = g.values[j] * xhat.at(i, j) + b.values[j];
  }
  const bool grad = needs(x) || needs(gamma) || needs(beta);
  return push(std::move(Y), grad, [x, gamma, beta, xhat = std::move(xhat), inv = std::move(inv), n, c](Tape& t, int self) {
    const Tensor& G = t.nodes_[self].grad;
    if (t.needs(beta)) {
      Tensor& gb = t.grad_buffer(beta.id);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) gb.values[j] += G.at(i, j);
      }
    }
    if (t.needs(gamma)) {
      Tensor& gg = t.grad_buffer(gamma.id);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) gg.values[j] += G.at(i, j) * xhat.at(i, j);
      }
    }
    if (t.needs(x)) {
      const Tensor& gam = t.value(gamma);
      Tensor& gx = t.grad_buffer(x.id);
      for (int j = 0; j < c; ++j) {
        Real sum_d = 0, sum_dx = 0;
        for (int i = 0; i < n; ++i) {
          const Real d = G.at(i, j) * gam.values[j];
          sum_d += d;
          sum_dx += d * xhat.at(i, j);
        }
        for (int i = 0; i < n; ++i) {
          const Real d = G.at(i, j) * gam.values[j];
          gx.at(i, j) += inv[j] / n * (n * d - sum_d - xhat.at(i, j) * sum_dx);
        }
      }
    }
  });
}

Var Tape::element(Var a, int r, int c) {
  const Tensor& A = value(a);
  require(r >= 0 && r < A.rows() && c >= 0 && c < A.cols(), ErrorKind::contract_violation, "element out of range");
  return push(Tensor::scalar(A.at(r, c)), needs(a), [a, r, c](Tape& t, int self) {
    t.grad_buffer(a.id).at(r, c) += t.nodes_[self].grad.values[0];
  });
}

}  // namespace coroute
