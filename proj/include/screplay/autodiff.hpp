#pragma once

#include "screplay/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace screplay {

template <typename T>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;
};

#ifdef NDEBUG
inline constexpr bool kCheckFiniteByDefault = false;
#else
inline constexpr bool kCheckFiniteByDefault = true;
#endif

/// Define-by-run tape for reverse-mode differentiation.
///
/// Nodes are appended as operations execute, so tape order is a topological
/// order; backward() walks it in reverse and visits each node once. Parameter
/// leaves reference caller-owned Tensors and receive accumulated gradients.
template <typename T>
class Graph {
public:
  /// Propagates the node's upstream gradient into its parents' accumulators.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  explicit Graph(bool check_finite = kCheckFiniteByDefault) : check_finite_(check_finite) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant input; no gradient is tracked.
  Var<T> input(Tensor<T> value);
  /// Parameter leaf. If `leaf.requires_grad()`, backward() accumulates into `leaf`.
  Var<T> param(Tensor<T>& leaf);

  /// Appends a primitive with a caller-supplied backward rule. Used by ops in
  /// this module and by fused losses.
  Var<T> record(std::string op, Shape shape, std::vector<T> value,
                std::vector<std::size_t> parents, BackwardFn backward);

  /// Reverse pass from a scalar output. Repeated calls accumulate into leaves.
  void backward(Var<T> output);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool check_finite() const noexcept { return check_finite_; }
  void clear() { nodes_.clear(); }

  const Shape& shape(Var<T> v) const { return node(v).shape; }
  std::span<const T> value(Var<T> v) const { return node(v).value; }
  std::span<const T> value(std::size_t id) const { return nodes_.at(id).value; }
  const Shape& shape(std::size_t id) const { return nodes_.at(id).shape; }
  Tensor<T> tensor(Var<T> v) const;
  T item(Var<T> v) const;

  /// Upstream gradient of a node during backward().
  std::span<const T> upstream(std::size_t id) const { return nodes_[id].grad; }
  /// Gradient accumulator of a parent, or an empty span if it needs no gradient.
  std::span<T> accumulator(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  /// "op#id", used in error messages.
  std::string node_name(std::size_t id) const;

  /// Number of backward rules executed by the last backward() call.
  std::size_t last_backward_visits() const noexcept { return last_visits_; }

private:
  struct Node {
    std::string op;
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Tensor<T>* leaf = nullptr;
    bool needs_grad = false;
  };

  const Node& node(Var<T> v) const;

  std::vector<Node> nodes_;
  bool check_finite_;
  std::size_t last_visits_ = 0;
};

extern template class Graph<float>;
extern template class Graph<double>;

// Primitives. Rank-1 operands are treated as 1 x n row vectors.

/// a[n x k] * b[k x m] -> [n x m]
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// a[n x k] * b[m x k]^T -> [n x m]
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
/// Element-wise product.
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
/// a[n x m] + bias[m] broadcast over rows.
template <typename T> Var<T> add_bias(Var<T> a, Var<T> bias);
template <typename T> Var<T> scale(Var<T> a, T factor);
template <typename T> Var<T> relu(Var<T> a);
template <typename T> Var<T> exp(Var<T> a);
template <typename T> Var<T> log(Var<T> a);
/// Sum of all entries -> scalar.
template <typename T> Var<T> sum(Var<T> a);
/// Mean of all entries -> scalar.
template <typename T> Var<T> mean(Var<T> a);
/// Per-row sums -> [n].
template <typename T> Var<T> row_sum(Var<T> a);
/// Inner product of two equally sized operands -> scalar.
template <typename T> Var<T> dot(Var<T> a, Var<T> b);

inline constexpr double kNormalizeEps = 1e-12;

/// Scales every row to unit Euclidean norm. Throws DegenerateInputError when a
/// row norm is at or below kNormalizeEps.
template <typename T> Var<T> l2_normalize(Var<T> a);

/// Affine map x * W^T + b with W stored as [out x in].
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  return add_bias(matmul_nt(x, weight), bias);
}

} // namespace screplay
