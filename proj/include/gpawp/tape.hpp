#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gpawp/tensor.hpp"

namespace gpawp {

// Handle into a Tape. Valid only for the tape that produced it.
struct Var {
  std::uint32_t id{0};
};

namespace detail {

// C(m x n) += A(m x k) * B(k x n)
inline void mm_acc_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C(m x n) += A(m x k) * B(n x k)^T
inline void mm_acc_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

// C(m x n) += A(k x m)^T * B(k x n)
inline void mm_acc_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

enum class Broadcast { None, LeftScalar, RightScalar, LeftVector, RightVector };

inline Broadcast broadcast_kind(const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::None;
  if (a.empty()) return Broadcast::LeftScalar;
  if (b.empty()) return Broadcast::RightScalar;
  // vector along the last axis of the other operand
  if (a.size() == 1 && b.size() == 2 && a[0] == b[1]) return Broadcast::LeftVector;
  if (b.size() == 1 && a.size() == 2 && b[0] == a[1]) return Broadcast::RightVector;
  throw ShapeError("cannot broadcast shapes " + shape_str(a) + " and " + shape_str(b));
}

}  // namespace detail

// Reverse-mode tape. Single-owner, single-threaded; ops never mutate their
// inputs. backward() propagates a scalar root to every requires-grad leaf in
// one deterministic reverse sweep.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  const Tensor& value(Var v) const { return nodes_[v.id].value; }

  // Gradient of the last backward() root with respect to v. Zero tensor if v
  // does not require grad or was not reached.
  Tensor grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.values.empty()) return Tensor::zeros(n.value.shape);
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  Var matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0])
      throw ShapeError("matmul of shapes " + shape_str(ta.shape) + " and " + shape_str(tb.shape));
    std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
    Tensor out = Tensor::zeros({m, n});
    detail::mm_acc_nn(ta.values.data(), tb.values.data(), out.values.data(), m, k, n);
    std::uint32_t ia = a.id, ib = b.id;
    return push(std::move(out), needs(a) || needs(b), [ia, ib, m, k, n](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& na = t.nodes_[ia];
      Node& nb = t.nodes_[ib];
      if (na.needs_grad)
        detail::mm_acc_nt(g.values.data(), nb.value.values.data(), na.grad.values.data(), m, n, k);
      if (nb.needs_grad)
        detail::mm_acc_tn(na.value.values.data(), g.values.data(), nb.grad.values.data(), k, m, n);
    });
  }

  Var add(Var a, Var b) { return binary(a, b, /*is_mul=*/false); }
  Var mul(Var a, Var b) { return binary(a, b, /*is_mul=*/true); }

  Var relu(Var a) {
    const Tensor& ta = value(a);
    Tensor out = ta;
    for (double& v : out.values) v = v > 0.0 ? v : 0.0;
    std::uint32_t ia = a.id;
    return push(std::move(out), needs(a), [ia](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& na = t.nodes_[ia];
      if (!na.needs_grad) return;
      for (std::size_t i = 0; i < g.values.size(); ++i)
        if (na.value.values[i] > 0.0) na.grad.values[i] += g.values[i];
    });
  }

  Var scale(Var a, double c) {
    const Tensor& ta = value(a);
    Tensor out = ta;
    for (double& v : out.values) v *= c;
    std::uint32_t ia = a.id;
    return push(std::move(out), needs(a), [ia, c](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& na = t.nodes_[ia];
      if (!na.needs_grad) return;
      for (std::size_t i = 0; i < g.values.size(); ++i) na.grad.values[i] += c * g.values[i];
    });
  }

  Var add_const(Var a, double c) {
    const Tensor& ta = value(a);
    Tensor out = ta;
    for (double& v : out.values) v += c;
    std::uint32_t ia = a.id;
    return push(std::move(out), needs(a), [ia](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& na = t.nodes_[ia];
      if (!na.needs_grad) return;
      for (std::size_t i = 0; i < g.values.size(); ++i) na.grad.values[i] += g.values[i];
    });
  }

  Var sum(Var a) {
    const Tensor& ta = value(a);
    double s = 0.0;
    for (double v : ta.values) s += v;
    std::uint32_t ia = a.id;
    return push(Tensor::scalar(s), needs(a), [ia](Tape& t) {
      double g = t.nodes_[t.cursor_].grad.values[0];
      Node& na = t.nodes_[ia];
      if (!na.needs_grad) return;
      for (double& gv : na.grad.values) gv += g;
    });
  }

  // Sum of selected matrix rows; the sum-pooling readout primitive.
  Var sum_rows(Var m, std::vector<int> rows) {
    const Tensor& tm = value(m);
    if (tm.rank() != 2) throw ShapeError("sum_rows on shape " + shape_str(tm.shape));
    if (rows.empty()) throw EmptyReadoutError("readout over an empty node set");
    std::size_t nr = tm.shape[0], nc = tm.shape[1];
    Tensor out = Tensor::zeros({nc});
    for (int r : rows) {
      if (r < 0 || static_cast<std::size_t>(r) >= nr)
        throw ContractError("row " + std::to_string(r) + " out of range for " +
                            shape_str(tm.shape));
      for (std::size_t j = 0; j < nc; ++j) out.values[j] += tm.at(r, j);
    }
    std::uint32_t im = m.id;
    return push(std::move(out), needs(m), [im, rows = std::move(rows), nc](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& nm = t.nodes_[im];
      if (!nm.needs_grad) return;
      for (int r : rows)
        for (std::size_t j = 0; j < nc; ++j) nm.grad.values[r * nc + j] += g.values[j];
    });
  }

  Var select_row(Var m, int row) {
    const Tensor& tm = value(m);
    if (tm.rank() != 2) throw ShapeError("select_row on shape " + shape_str(tm.shape));
    if (row < 0 || static_cast<std::size_t>(row) >= tm.shape[0])
      throw ContractError("row " + std::to_string(row) + " out of range for " +
                          shape_str(tm.shape));
    std::size_t nc = tm.shape[1];
    Tensor out = Tensor::zeros({nc});
    for (std::size_t j = 0; j < nc; ++j) out.values[j] = tm.at(row, j);
    std::uint32_t im = m.id;
    return push(std::move(out), needs(m), [im, row, nc](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& nm = t.nodes_[im];
      if (!nm.needs_grad) return;
      for (std::size_t j = 0; j < nc; ++j) nm.grad.values[row * nc + j] += g.values[j];
    });
  }

  Var index(Var v, std::size_t i) {
    const Tensor& tv = value(v);
    if (tv.rank() != 1 || i >= tv.shape[0])
      throw ShapeError("index " + std::to_string(i) + " into shape " + shape_str(tv.shape));
    std::uint32_t iv = v.id;
    return push(Tensor::scalar(tv.values[i]), needs(v), [iv, i](Tape& t) {
      double g = t.nodes_[t.cursor_].grad.values[0];
      Node& nv = t.nodes_[iv];
      if (nv.needs_grad) nv.grad.values[i] += g;
    });
  }

  Var stack(const std::vector<Var>& scalars) {
    if (scalars.empty()) throw ContractError("stack of zero scalars");
    std::vector<double> vals;
    std::vector<std::uint32_t> ids;
    bool ng = false;
    for (Var s : scalars) {
      const Tensor& ts = value(s);
      if (!ts.is_scalar()) throw ShapeError("stack of non-scalar shape " + shape_str(ts.shape));
      vals.push_back(ts.values[0]);
      ids.push_back(s.id);
      ng = ng || needs(s);
    }
    return push(Tensor::vec(std::move(vals)), ng, [ids = std::move(ids)](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        Node& n = t.nodes_[ids[i]];
        if (n.needs_grad) n.grad.values[0] += g.values[i];
      }
    });
  }

  // Repeat each component of v `times` consecutive slots. Used to broadcast a
  // per-block mask over the dimensions of a block-partitioned vector.
  Var expand_blocks(Var v, std::size_t times) {
    const Tensor& tv = value(v);
    if (tv.rank() != 1) throw ShapeError("expand_blocks on shape " + shape_str(tv.shape));
    std::size_t t_blocks = tv.shape[0];
    Tensor out = Tensor::zeros({t_blocks * times});
    for (std::size_t b = 0; b < t_blocks; ++b)
      for (std::size_t j = 0; j < times; ++j) out.values[b * times + j] = tv.values[b];
    std::uint32_t iv = v.id;
    return push(std::move(out), needs(v), [iv, t_blocks, times](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& nv = t.nodes_[iv];
      if (!nv.needs_grad) return;
      for (std::size_t b = 0; b < t_blocks; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < times; ++j) s += g.values[b * times + j];
        nv.grad.values[b] += s;
      }
    });
  }

  // Place v's components at `positions` of a zero vector of length full_len.
  Var scatter(Var v, std::vector<int> positions, std::size_t full_len) {
    const Tensor& tv = value(v);
    if (tv.rank() != 1 || tv.shape[0] != positions.size())
      throw ShapeError("scatter of shape " + shape_str(tv.shape) + " onto " +
                       std::to_string(positions.size()) + " positions");
    Tensor out = Tensor::zeros({full_len});
    for (std::size_t i = 0; i < positions.size(); ++i) {
      int p = positions[i];
      if (p < 0 || static_cast<std::size_t>(p) >= full_len)
        throw ContractError("scatter position " + std::to_string(p) + " out of range");
      out.values[p] = tv.values[i];
    }
    std::uint32_t iv = v.id;
    return push(std::move(out), needs(v), [iv, positions = std::move(positions)](Tape& t) {
      const Tensor& g = t.nodes_[t.cursor_].grad;
      Node& nv = t.nodes_[iv];
      if (!nv.needs_grad) return;
      for (std::size_t i = 0; i < positions.size(); ++i)
        nv.grad.values[i] += g.values[positions[i]];
    });
  }

  Var cosine_sim(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 1 || tb.rank() != 1 || ta.shape[0] != tb.shape[0])
      throw ShapeError("cosine_sim of shapes " + shape_str(ta.shape) + " and " +
                       shape_str(tb.shape));
    double na = l2_norm(ta.values), nb = l2_norm(tb.values);
    if (na < 1e-12 || nb < 1e-12)
      throw DegenerateVectorError("cosine similarity of near-zero vector (norms " +
                                  std::to_string(na) + ", " + std::to_string(nb) + ")");
    double d = dot(ta.values, tb.values);
    double val = d / (na * nb);
    std::uint32_t ia = a.id, ib = b.id;
    return push(Tensor::scalar(val), needs(a) || needs(b), [ia, ib, na, nb, val](Tape& t) {
      double g = t.nodes_[t.cursor_].grad.values[0];
      Node& xa = t.nodes_[ia];
      Node& xb = t.nodes_[ib];
      std::size_t d = xa.value.values.size();
      if (xa.needs_grad)
        for (std::size_t i = 0; i < d; ++i)
          xa.grad.values[i] +=
              g * (xb.value.values[i] / (na * nb) - val * xa.value.values[i] / (na * na));
      if (xb.needs_grad)
        for (std::size_t i = 0; i < d; ++i)
          xb.grad.values[i] +=
              g * (xa.value.values[i] / (na * nb) - val * xb.value.values[i] / (nb * nb));
    });
  }

  // -ln softmax(logits)[target], computed with max-subtraction.
  Var softmax_nll(Var logits, std::size_t target) {
    const Tensor& tl = value(logits);
    if (tl.rank() != 1 || tl.shape[0] < 2)
      throw ContractError("softmax_nll needs >=2 logits, got shape " + shape_str(tl.shape));
    if (target >= tl.shape[0])
      throw ContractError("softmax_nll target " + std::to_string(target) + " out of range");
    for (std::size_t i = 0; i < tl.values.size(); ++i)
      if (!std::isfinite(tl.values[i])) throw NumericError("non-finite logit", i);
    double mx = *std::max_element(tl.values.begin(), tl.values.end());
    double z = 0.0;
    for (double v : tl.values) z += std::exp(v - mx);
    double loss = std::log(z) + mx - tl.values[target];
    std::uint32_t il = logits.id;
    return push(Tensor::scalar(loss), needs(logits), [il, target, mx, z](Tape& t) {
      double g = t.nodes_[t.cursor_].grad.values[0];
      Node& nl = t.nodes_[il];
      if (!nl.needs_grad) return;
      for (std::size_t i = 0; i < nl.value.values.size(); ++i) {
        double p = std::exp(nl.value.values[i] - mx) / z;
        nl.grad.values[i] += g * (p - (i == target ? 1.0 : 0.0));
      }
    });
  }

  // Reverse sweep from a scalar root. Each node <= root is visited exactly
  // once, in reverse creation order; grads are reset first, so repeated calls
  // on the same tape are independent.
  void backward(Var root) {
    Node& rn = nodes_[root.id];
    if (!rn.value.is_scalar())
      throw ContractError("backward root must be scalar, got shape " + shape_str(rn.value.shape));
    for (std::uint32_t i = 0; i <= root.id; ++i) {
      Node& n = nodes_[i];
      if (n.needs_grad)
        n.grad = Tensor::zeros(n.value.shape);
      else
        n.grad.values.clear();
    }
    if (!rn.needs_grad) return;
    rn.grad.values[0] = 1.0;
    for (std::uint32_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.needs_grad && n.backprop) {
        cursor_ = i;
        n.backprop(*this);
      }
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad{false};
    std::function<void(Tape&)> backprop;
  };

  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  Var push(Tensor value, bool needs_grad, std::function<void(Tape&)> backprop) {
    nodes_.push_back(Node{std::move(value), Tensor{}, needs_grad, std::move(backprop)});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Var binary(Var a, Var b, bool is_mul) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    auto kind = detail::broadcast_kind(ta.shape, tb.shape);
    const Tensor& big = (kind == detail::Broadcast::LeftScalar ||
                         kind == detail::Broadcast::LeftVector)
                            ? tb
                            : ta;
    std::size_t n = big.values.size();
    std::size_t last = big.rank() == 2 ? big.shape[1] : n;
    auto map_a = [&](std::size_t i) -> std::size_t {
      switch (kind) {
        case detail::Broadcast::LeftScalar: return 0;
        case detail::Broadcast::LeftVector: return i % last;
        default: return i;
      }
    };
    auto map_b = [&](std::size_t i) -> std::size_t {
      switch (kind) {
        case detail::Broadcast::RightScalar: return 0;
        case detail::Broadcast::RightVector: return i % last;
        default: return i;
      }
    };
    Tensor out = Tensor::zeros(big.shape);
    for (std::size_t i = 0; i < n; ++i) {
      double va = ta.values[map_a(i)], vb = tb.values[map_b(i)];
      out.values[i] = is_mul ? va * vb : va + vb;
    }
    std::uint32_t ia = a.id, ib = b.id;
    return push(std::move(out), needs(a) || needs(b),
                [ia, ib, kind, last, n, is_mul](Tape& t) {
                  const Tensor& g = t.nodes_[t.cursor_].grad;
                  Node& na = t.nodes_[ia];
                  Node& nb = t.nodes_[ib];
                  auto ai = [&](std::size_t i) -> std::size_t {
                    switch (kind) {
                      case detail::Broadcast::LeftScalar: return 0;
                      case detail::Broadcast::LeftVector: return i % last;
                      default: return i;
                    }
                  };
                  auto bi = [&](std::size_t i) -> std::size_t {
                    switch (kind) {
                      case detail::Broadcast::RightScalar: return 0;
                      case detail::Broadcast::RightVector: return i % last;
                      default: return i;
                    }
                  };
                  for (std::size_t i = 0; i < n; ++i) {
                    double gv = g.values[i];
                    if (na.needs_grad)
                      na.grad.values[ai(i)] += is_mul ? gv * nb.value.values[bi(i)] : gv;
                    if (nb.needs_grad)
                      nb.grad.values[bi(i)] += is_mul ? gv * na.value.values[ai(i)] : gv;
                  }
                });
  }

  std::vector<Node> nodes_;
  std::uint32_t cursor_{0};
};

}  // namespace gpawp
