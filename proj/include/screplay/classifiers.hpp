#pragma once

#include "screplay/batch.hpp"
#include "screplay/model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace screplay {

/// Per-class mean embeddings computed from buffered samples with one model step.
struct PrototypeSet {
  std::map<int, std::vector<double>> means;
  std::map<int, std::size_t> counts;
  std::uint64_t model_step = 0;

  bool empty() const noexcept { return means.empty(); }
  std::vector<int> classes() const;
};

/// Means of the encoder embeddings grouped by label. Classes with no samples
/// are absent. Throws NoPrototypesError on an empty snapshot.
PrototypeSet compute_prototypes(const ModelState& model, const Batch& snapshot);

/// Class of the prototype nearest to `embedding` in Euclidean distance; ties
/// go to the lowest class label.
int nearest_prototype(const PrototypeSet& protos, std::span<const float> embedding);

/// Encodes `x` and returns its nearest-prototype class. Throws StalenessError
/// when the prototypes were built at another model step.
int ncm_classify(const PrototypeSet& protos, const ModelState& model, const LabeledExample& x);
std::vector<int> ncm_classify(const PrototypeSet& protos, const ModelState& model, const Batch& xs);

/// Argmax over head logits; ties go to the lowest class label.
int softmax_classify(const ModelState& model, const LabeledExample& x);
std::vector<int> softmax_classify(const ModelState& model, const Batch& xs);

} // namespace screplay
