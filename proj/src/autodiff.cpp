#include "screplay/autodiff.hpp"

#include "screplay/error.hpp"

#include <algorithm>
#include <cmath>

namespace screplay {

template <typename T>
Var<T> Graph<T>::input(Tensor<T> value) {
  Node n;
  n.op = "input";
  n.shape = value.shape();
  n.value = std::move(value.values());
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::param(Tensor<T>& leaf) {
  Node n;
  n.op = "param";
  n.shape = leaf.shape();
  n.value = leaf.values();
  n.leaf = &leaf;
  n.needs_grad = leaf.requires_grad();
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::record(std::string op, Shape shape, std::vector<T> value,
                        std::vector<std::size_t> parents, BackwardFn backward) {
  const std::size_t id = nodes_.size();
  if (value.size() != shape_size(shape)) {
    throw ShapeError(op + "#" + std::to_string(id) + ": value length does not match shape " +
                     shape_string(shape));
  }
  if (check_finite_) {
    for (T v : value) {
      if (!std::isfinite(v)) {
        throw NumericError(op + "#" + std::to_string(id) + ": non-finite value in output");
      }
    }
  }
  Node n;
  n.op = std::move(op);
  n.shape = std::move(shape);
  n.value = std::move(value);
  for (auto p : parents) {
    if (p >= id) throw StateError(n.op + ": parent does not precede node");
    n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
  }
  n.parents = std::move(parents);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, id};
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(Var<T> v) const {
  if (v.graph != this || v.id >= nodes_.size()) {
    throw StateError("variable does not belong to this graph or was cleared");
  }
  return nodes_[v.id];
}

template <typename T>
Tensor<T> Graph<T>::tensor(Var<T> v) const {
  const auto& n = node(v);
  return Tensor<T>(n.shape, n.value);
}

template <typename T>
T Graph<T>::item(Var<T> v) const {
  const auto& n = node(v);
  if (n.value.size() != 1) throw ContractError(node_name(v.id) + ": item() on non-scalar");
  return n.value[0];
}

template <typename T>
std::span<T> Graph<T>::accumulator(std::size_t id) {
  auto& n = nodes_[id];
  if (!n.needs_grad) return {};
  return n.grad;
}

template <typename T>
std::string Graph<T>::node_name(std::size_t id) const {
  return nodes_.at(id).op + "#" + std::to_string(id);
}

template <typename T>
void Graph<T>::backward(Var<T> output) {
  if (output.graph != this || output.id >= nodes_.size()) {
    throw StateError("backward() called before a forward pass produced this output");
  }
  auto& out = nodes_[output.id];
  if (out.value.size() != 1) {
    throw ContractError("backward() requires a scalar output, got " + shape_string(out.shape) +
                        " at " + node_name(output.id));
  }
  last_visits_ = 0;
  for (std::size_t i = 0; i <= output.id; ++i) {
    auto& n = nodes_[i];
    if (n.needs_grad) {
      n.grad.assign(n.value.size(), T{0});
    } else {
      n.grad.clear();
    }
  }
  if (!out.needs_grad) return;
  out.grad[0] = T{1};
  for (std::size_t i = output.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.needs_grad) continue;
    if (n.backward) {
      n.backward(*this, i);
      ++last_visits_;
    }
  }
  for (std::size_t i = 0; i <= output.id; ++i) {
    auto& n = nodes_[i];
    if (n.leaf && n.needs_grad) {
      if (n.leaf->shape() != n.shape) {
        throw StateError(node_name(i) + ": parameter was reshaped after the forward pass");
      }
      n.leaf->accumulate_grad(n.grad);
    }
  }
}

template class Graph<float>;
template class Graph<double>;

namespace {

struct MatView {
  std::size_t rows;
  std::size_t cols;
};

MatView as_matrix(const Shape& s) {
  if (s.empty()) return {1, 1};
  if (s.size() == 1) return {1, s[0]};
  return {s[0], s[1]};
}

template <typename T>
Graph<T>& graph_of(Var<T> a) {
  if (!a.graph) throw StateError("operation on a detached variable");
  return *a.graph;
}

template <typename T>
Graph<T>& graph_of(Var<T> a, Var<T> b) {
  if (!a.graph || a.graph != b.graph) throw StateError("operands belong to different graphs");
  return *a.graph;
}

template <typename T>
std::string next_name(const Graph<T>& g, const char* op) {
  return std::string(op) + "#" + std::to_string(g.size());
}

// C[n x m] += A[n x k] * B[k x m]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    T* crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T{0}) continue;
      const T* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[n x m] += A[n x k] * B[m x k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const T* brow = b + j * k;
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * m + j] += acc;
    }
  }
}

// C[k x m] += A[n x k]^T * B[n x m]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* brow = b + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T{0}) continue;
      T* crow = c + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void require_same_shape(const Graph<T>& g, Var<T> a, Var<T> b, const char* op) {
  if (g.shape(a) != g.shape(b)) {
    throw ShapeError(next_name(g, op) + ": operand shapes " + shape_string(g.shape(a)) + " and " +
                     shape_string(g.shape(b)) + " differ");
  }
}

} // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  auto& g = graph_of(a, b);
  const auto ma = as_matrix(g.shape(a));
  const auto mb = as_matrix(g.shape(b));
  if (ma.cols != mb.rows) {
    throw ShapeError(next_name(g, "matmul") + ": inner dimensions " + shape_string(g.shape(a)) +
                     " x " + shape_string(g.shape(b)) + " do not agree");
  }
  const std::size_t n = ma.rows, k = ma.cols, m = mb.cols;
  std::vector<T> out(n * m, T{0});
  gemm_nn(g.value(a).data(), g.value(b).data(), out.data(), n, k, m);
  const std::size_t ia = a.id, ib = b.id;
  return g.record("matmul", Shape{n, m}, std::move(out), {ia, ib},
                  [ia, ib, n, k, m](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    if (auto da = gr.accumulator(ia); !da.empty()) {
                      // dA = dC * B^T
                      gemm_nt(up.data(), gr.value(ib).data(), da.data(), n, m, k);
                    }
                    if (auto db = gr.accumulator(ib); !db.empty()) {
                      // dB = A^T * dC
                      gemm_tn(gr.value(ia).data(), up.data(), db.data(), n, k, m);
                    }
                  });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  auto& g = graph_of(a, b);
  const auto ma = as_matrix(g.shape(a));
  const auto mb = as_matrix(g.shape(b));
  if (ma.cols != mb.cols) {
    throw ShapeError(next_name(g, "matmul_nt") + ": inner dimensions " +
                     shape_string(g.shape(a)) + " x " + shape_string(g.shape(b)) +
                     "^T do not agree");
  }
  const std::size_t n = ma.rows, k = ma.cols, m = mb.rows;
  std::vector<T> out(n * m, T{0});
  gemm_nt(g.value(a).data(), g.value(b).data(), out.data(), n, k, m);
  const std::size_t ia = a.id, ib = b.id;
  return g.record("matmul_nt", Shape{n, m}, std::move(out), {ia, ib},
                  [ia, ib, n, k, m](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    if (auto da = gr.accumulator(ia); !da.empty()) {
                      // dA = dC * B
                      gemm_nn(up.data(), gr.value(ib).data(), da.data(), n, m, k);
                    }
                    if (auto db = gr.accumulator(ib); !db.empty()) {
                      // dB = dC^T * A
                      gemm_tn(up.data(), gr.value(ia).data(), db.data(), n, m, k);
                    }
                  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  auto& g = graph_of(a, b);
  require_same_shape(g, a, b, "add");
  const auto va = g.value(a), vb = g.value(b);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  const std::size_t ia = a.id, ib = b.id;
  return g.record("add", g.shape(a), std::move(out), {ia, ib},
                  [ia, ib](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    for (auto id : {ia, ib}) {
                      if (auto d = gr.accumulator(id); !d.empty()) {
                        for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i];
                      }
                    }
                  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  auto& g = graph_of(a, b);
  require_same_shape(g, a, b, "sub");
  const auto va = g.value(a), vb = g.value(b);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  const std::size_t ia = a.id, ib = b.id;
  return g.record("sub", g.shape(a), std::move(out), {ia, ib},
                  [ia, ib](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i];
                    }
                    if (auto d = gr.accumulator(ib); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] -= up[i];
                    }
                  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  auto& g = graph_of(a, b);
  require_same_shape(g, a, b, "mul");
  const auto va = g.value(a), vb = g.value(b);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  const std::size_t ia = a.id, ib = b.id;
  return g.record("mul", g.shape(a), std::move(out), {ia, ib},
                  [ia, ib](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    const auto xa = gr.value(ia), xb = gr.value(ib);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i] * xb[i];
                    }
                    if (auto d = gr.accumulator(ib); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i] * xa[i];
                    }
                  });
}

template <typename T>
Var<T> add_bias(Var<T> a, Var<T> bias) {
  auto& g = graph_of(a, bias);
  const auto ma = as_matrix(g.shape(a));
  if (shape_size(g.shape(bias)) != ma.cols || g.shape(bias).size() > 1) {
    throw ShapeError(next_name(g, "add_bias") + ": bias " + shape_string(g.shape(bias)) +
                     " does not match columns of " + shape_string(g.shape(a)));
  }
  const auto va = g.value(a), vb = g.value(bias);
  std::vector<T> out(va.size());
  for (std::size_t r = 0; r < ma.rows; ++r) {
    for (std::size_t c = 0; c < ma.cols; ++c) out[r * ma.cols + c] = va[r * ma.cols + c] + vb[c];
  }
  const std::size_t ia = a.id, ib = bias.id;
  const std::size_t rows = ma.rows, cols = ma.cols;
  return g.record("add_bias", g.shape(a), std::move(out), {ia, ib},
                  [ia, ib, rows, cols](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i];
                    }
                    if (auto d = gr.accumulator(ib); !d.empty()) {
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t c = 0; c < cols; ++c) d[c] += up[r * cols + c];
                      }
                    }
                  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  auto& g = graph_of(a);
  const auto va = g.value(a);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * factor;
  const std::size_t ia = a.id;
  return g.record("scale", g.shape(a), std::move(out), {ia},
                  [ia, factor](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i] * factor;
                    }
                  });
}

template <typename T>
Var<T> relu(Var<T> a) {
  auto& g = graph_of(a);
  const auto va = g.value(a);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] > T{0} ? va[i] : T{0};
  const std::size_t ia = a.id;
  return g.record("relu", g.shape(a), std::move(out), {ia},
                  [ia](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    const auto x = gr.value(ia);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      // Subgradient 0 at x == 0.
                      for (std::size_t i = 0; i < up.size(); ++i) {
                        if (x[i] > T{0}) d[i] += up[i];
                      }
                    }
                  });
}

template <typename T>
Var<T> exp(Var<T> a) {
  auto& g = graph_of(a);
  const auto va = g.value(a);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(va[i]);
  const std::size_t ia = a.id;
  return g.record("exp", g.shape(a), std::move(out), {ia},
                  [ia](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    const auto y = gr.value(self);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i] * y[i];
                    }
                  });
}

template <typename T>
Var<T> log(Var<T> a) {
  auto& g = graph_of(a);
  const auto va = g.value(a);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(va[i]);
  const std::size_t ia = a.id;
  return g.record("log", g.shape(a), std::move(out), {ia},
                  [ia](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    const auto x = gr.value(ia);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      for (std::size_t i = 0; i < up.size(); ++i) d[i] += up[i] / x[i];
                    }
                  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  auto& g = graph_of(a);
  T total{0};
  for (T v : g.value(a)) total += v;
  const std::size_t ia = a.id;
  return g.record("sum", Shape{}, {total}, {ia}, [ia](Graph<T>& gr, std::size_t self) {
    const T up = gr.upstream(self)[0];
    if (auto d = gr.accumulator(ia); !d.empty()) {
      for (auto& x : d) x += up;
    }
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  auto& g = graph_of(a);
  const auto va = g.value(a);
  T total{0};
  for (T v : va) total += v;
  const T inv = T{1} / static_cast<T>(va.size());
  const std::size_t ia = a.id;
  return g.record("mean", Shape{}, {total * inv}, {ia}, [ia, inv](Graph<T>& gr, std::size_t self) {
    const T up = gr.upstream(self)[0] * inv;
    if (auto d = gr.accumulator(ia); !d.empty()) {
      for (auto& x : d) x += up;
    }
  });
}

template <typename T>
Var<T> row_sum(Var<T> a) {
  auto& g = graph_of(a);
  const auto m = as_matrix(g.shape(a));
  const auto va = g.value(a);
  std::vector<T> out(m.rows, T{0});
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out[r] += va[r * m.cols + c];
  }
  const std::size_t ia = a.id, cols = m.cols;
  return g.record("row_sum", Shape{m.rows}, std::move(out), {ia},
                  [ia, cols](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    if (auto d = gr.accumulator(ia); !d.empty()) {
                      for (std::size_t r = 0; r < up.size(); ++r) {
                        for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += up[r];
                      }
                    }
                  });
}

template <typename T>
Var<T> dot(Var<T> a, Var<T> b) {
  auto& g = graph_of(a, b);
  const auto va = g.value(a), vb = g.value(b);
  if (va.size() != vb.size()) {
    throw ShapeError(next_name(g, "dot") + ": operand sizes " + shape_string(g.shape(a)) +
                     " and " + shape_string(g.shape(b)) + " differ");
  }
  T total{0};
  for (std::size_t i = 0; i < va.size(); ++i) total += va[i] * vb[i];
  const std::size_t ia = a.id, ib = b.id;
  return g.record("dot", Shape{}, {total}, {ia, ib}, [ia, ib](Graph<T>& gr, std::size_t self) {
    const T up = gr.upstream(self)[0];
    const auto xa = gr.value(ia), xb = gr.value(ib);
    if (auto d = gr.accumulator(ia); !d.empty()) {
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += up * xb[i];
    }
    if (auto d = gr.accumulator(ib); !d.empty()) {
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += up * xa[i];
    }
  });
}

template <typename T>
Var<T> l2_normalize(Var<T> a) {
  auto& g = graph_of(a);
  const auto m = as_matrix(g.shape(a));
  const auto va = g.value(a);
  std::vector<T> out(va.size());
  std::vector<T> norms(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    // Accumulate in double so float rows near the threshold are judged consistently.
    double sq = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double x = va[r * m.cols + c];
      sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > kNormalizeEps)) {
      throw DegenerateInputError(next_name(g, "l2_normalize") + ": row " + std::to_string(r) +
                                 " has norm " + std::to_string(norm));
    }
    norms[r] = static_cast<T>(norm);
    for (std::size_t c = 0; c < m.cols; ++c) {
      out[r * m.cols + c] = static_cast<T>(va[r * m.cols + c] / norm);
    }
  }
  const std::size_t ia = a.id, cols = m.cols;
  return g.record("l2_normalize", g.shape(a), std::move(out), {ia},
                  [ia, cols, norms = std::move(norms)](Graph<T>& gr, std::size_t self) {
                    const auto up = gr.upstream(self);
                    const auto y = gr.value(self);
                    auto d = gr.accumulator(ia);
                    if (d.empty()) return;
                    // dx = (g - y (y . g)) / |x|
                    for (std::size_t r = 0; r < norms.size(); ++r) {
                      const std::size_t o = r * cols;
                      T yg{0};
                      for (std::size_t c = 0; c < cols; ++c) yg += y[o + c] * up[o + c];
                      for (std::size_t c = 0; c < cols; ++c) {
                        d[o + c] += (up[o + c] - y[o + c] * yg) / norms[r];
                      }
                    }
                  });
}

#define SCREPLAY_INSTANTIATE_OPS(T)                                                     \
  template Var<T> matmul(Var<T>, Var<T>);                                               \
  template Var<T> matmul_nt(Var<T>, Var<T>);                                            \
  template Var<T> add(Var<T>, Var<T>);                                                  \
  template Var<T> sub(Var<T>, Var<T>);                                                  \
  template Var<T> mul(Var<T>, Var<T>);                                                  \
  template Var<T> add_bias(Var<T>, Var<T>);                                             \
  template Var<T> scale(Var<T>, T);                                                     \
  template Var<T> relu(Var<T>);                                                         \
  template Var<T> exp(Var<T>);                                                          \
  template Var<T> log(Var<T>);                                                          \
  template Var<T> sum(Var<T>);                                                          \
  template Var<T> mean(Var<T>);                                                         \
  template Var<T> row_sum(Var<T>);                                                      \
  template Var<T> dot(Var<T>, Var<T>);                                                  \
  template Var<T> l2_normalize(Var<T>);

SCREPLAY_INSTANTIATE_OPS(float)
SCREPLAY_INSTANTIATE_OPS(double)

#undef SCREPLAY_INSTANTIATE_OPS

} // namespace screplay
