#include "screplay/classifiers.hpp"

#include "screplay/error.hpp"

#include <limits>

namespace screplay {

std::vector<int> PrototypeSet::classes() const {
  std::vector<int> out;
  out.reserve(means.size());
  for (const auto& [c, _] : means) out.push_back(c);
  return out;
}

PrototypeSet compute_prototypes(const ModelState& model, const Batch& snapshot) {
  if (snapshot.empty()) throw NoPrototypesError("cannot build prototypes from an empty buffer");
  const std::size_t dim = model.config().embed_dim;
  const auto emb = embed_batch(model, snapshot);
  PrototypeSet out;
  out.model_step = model.step();
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    auto& sum = out.means[snapshot.label(i)];
    if (sum.empty()) sum.assign(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) sum[k] += emb[i * dim + k];
    ++out.counts[snapshot.label(i)];
  }
  for (auto& [c, sum] : out.means) {
    const double n = static_cast<double>(out.counts[c]);
    for (auto& v : sum) v /= n;
  }
  return out;
}

int nearest_prototype(const PrototypeSet& protos, std::span<const float> embedding) {
  if (protos.empty()) throw NoPrototypesError("no prototypes to classify against");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  // std::map iterates in ascending label order, so strict < keeps the lowest label on ties.
  for (const auto& [c, mu] : protos.means) {
    if (mu.size() != embedding.size()) {
      throw ShapeError("prototype dim " + std::to_string(mu.size()) + " vs embedding dim " +
                       std::to_string(embedding.size()));
    }
    double d = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      const double diff = embedding[k] - mu[k];
      d += diff * diff;
    }
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

namespace {

void require_fresh(const PrototypeSet& protos, const ModelState& model) {
  if (protos.empty()) throw NoPrototypesError("no prototypes to classify against");
  if (protos.model_step != model.step()) {
    throw StalenessError("prototypes built at step " + std::to_string(protos.model_step) +
                         " queried with model at step " + std::to_string(model.step()));
  }
}

int argmax_class(std::span<const float> row, const std::vector<int>& classes) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best] || (row[j] == row[best] && classes[j] < classes[best])) best = j;
  }
  return classes[best];
}

} // namespace

int ncm_classify(const PrototypeSet& protos, const ModelState& model, const LabeledExample& x) {
  Batch one(x.x.size());
  one.push_back(x);
  return ncm_classify(protos, model, one).front();
}

std::vector<int> ncm_classify(const PrototypeSet& protos, const ModelState& model, const Batch& xs) {
  require_fresh(protos, model);
  if (xs.empty()) return {};
  const std::size_t dim = model.config().embed_dim;
  const auto emb = embed_batch(model, xs);
  std::vector<int> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = nearest_prototype(protos, std::span<const float>(emb.data() + i * dim, dim));
  }
  return out;
}

int softmax_classify(const ModelState& model, const LabeledExample& x) {
  Batch one(x.x.size());
  one.push_back(x);
  return softmax_classify(model, one).front();
}

std::vector<int> softmax_classify(const ModelState& model, const Batch& xs) {
  if (!model.has_head()) throw NoClassesError("softmax classification without a head");
  if (xs.empty()) return {};
  Graph<float> g;
  auto r = encode(g, model, xs);
  auto z = logits(g, model, r);
  const auto values = g.value(z);
  const std::size_t c = model.num_head_classes();
  std::vector<int> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = argmax_class(values.subspan(i * c, c), model.head_classes());
  }
  return out;
}

} // namespace screplay
