#include "screplay/gradcheck.hpp"

#include "screplay/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace screplay {

namespace {

double evaluate(const ScalarFunction& fn) {
  Graph<double> g(true);
  return g.item(fn(g));
}

double central(const ScalarFunction& fn, double& value, double step) {
  const double saved = value;
  value = saved + step;
  const double up = evaluate(fn);
  value = saved - step;
  const double down = evaluate(fn);
  value = saved;
  return (up - down) / (2.0 * step);
}

} // namespace

GradCheckReport grad_check(const ScalarFunction& fn, std::span<Tensor<double>* const> leaves,
                           double tolerance, double h, FiniteDifference scheme) {
  for (auto* leaf : leaves) {
    if (!leaf->requires_grad()) throw ContractError("grad_check leaf without requires_grad");
    leaf->clear_grad();
  }
  {
    Graph<double> g(true);
    auto out = fn(g);
    g.backward(out);
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto& leaf = *leaves[l];
    std::vector<double> analytic(leaf.size(), 0.0);
    if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());
    auto values = leaf.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      double numeric = central(fn, values[i], h);
      if (scheme == FiniteDifference::richardson) {
        numeric = (4.0 * central(fn, values[i], 0.5 * h) - numeric) / 3.0;
      }
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic[i] - numeric) / denom;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_leaf = l;
        report.worst_entry = i;
      }
      ++report.entries_checked;
    }
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

} // namespace screplay
