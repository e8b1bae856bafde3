#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace screplay {

struct GradientSuiteResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t entries = 0;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  bool passed = false;
};

inline constexpr double kGradientTolerance = 1e-5;
inline constexpr double kFiniteDifferenceStep = 1e-4;

/// Contrastive loss w.r.t. unit-norm projections: random batches with
/// 2 <= rows <= 16 and 2 <= D_P <= 8.
GradientSuiteResult scl_gradient_suite(std::size_t trials, std::uint64_t seed, double tau = 0.1);

/// Cross-entropy w.r.t. logits on random small problems.
GradientSuiteResult cross_entropy_gradient_suite(std::size_t trials, std::uint64_t seed);

/// End-to-end model parameters: encoder + projection under the contrastive
/// loss, encoder + head under cross-entropy, for every projection kind.
GradientSuiteResult model_gradient_suite(std::size_t trials, std::uint64_t seed);

/// Every suite above with its default trial count.
std::vector<GradientSuiteResult> run_gradient_suites(std::uint64_t seed);

} // namespace screplay
