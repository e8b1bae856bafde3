#pragma once

#include "screplay/autodiff.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>

namespace screplay {

/// Builds a scalar-valued graph reading the current contents of the checked leaves.
using ScalarFunction = std::function<Var<double>(Graph<double>&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  std::size_t entries_checked = 0;
  /// Leaf index and flat entry of the worst disagreement.
  std::size_t worst_leaf = 0;
  std::size_t worst_entry = 0;
  bool passed = false;
};

/// `central`: (f(x+h) - f(x-h)) / 2h, truncation error O(h^2).
/// `richardson`: (4 D(h/2) - D(h)) / 3 over central differences D, O(h^4),
/// without ever stepping further than h from x.
enum class FiniteDifference { central, richardson };

/// Compares reverse-mode gradients with central differences of step `h`.
///
/// Error per entry is |g_a - g_n| / max(|g_a|, |g_n|, 1e-8). Runs in 64-bit
/// reals only. Leaves must have requires_grad set; their gradients are
/// overwritten.
GradCheckReport grad_check(const ScalarFunction& fn, std::span<Tensor<double>* const> leaves,
                           double tolerance, double h = 1e-4,
                           FiniteDifference scheme = FiniteDifference::richardson);

} // namespace screplay
