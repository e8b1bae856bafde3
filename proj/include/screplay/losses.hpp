#pragma once

#include "screplay/autodiff.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace screplay {

/// Positive contrastive temperature.
class Temperature {
public:
  explicit Temperature(double tau);
  double value() const noexcept { return tau_; }

private:
  double tau_;
};

enum class ViewOrigin : std::uint8_t { raw, augmented };

/// Projections of a batch followed by projections of its augmented views:
/// rows 0..b-1 are originals, rows b..2b-1 their augmentations in the same order.
template <typename T>
struct MultiviewBatch {
  Var<T> projections;
  std::vector<int> labels;
  std::vector<ViewOrigin> origin;

  /// Builds the paired layout from `b` base labels; `z` must have 2b rows.
  static MultiviewBatch paired(Var<T> z, std::span<const int> base_labels);
};

/// Supervised contrastive loss, summed over anchors.
///
/// For anchor i with positives P(i) (same label, excluding i) and all others
/// A(i): -1/|P(i)| * sum_p log(exp(z_i.z_p/tau) / sum_{a in A(i)} exp(z_i.z_a/tau)).
/// Anchors without positives contribute 0. Evaluated with per-anchor max
/// subtraction. Rows must be unit-norm within 1e-4.
template <typename T>
Var<T> scl_loss(Var<T> z, std::span<const int> labels, Temperature tau);

template <typename T>
Var<T> scl_loss(const MultiviewBatch<T>& mv, Temperature tau) {
  return scl_loss(mv.projections, std::span<const int>(mv.labels), tau);
}

/// Mean categorical cross-entropy; `targets` are column indices in [0, c).
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> targets);

} // namespace screplay
