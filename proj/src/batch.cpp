#include "screplay/batch.hpp"

#include "screplay/error.hpp"

#include <string>

namespace screplay {

Batch::Batch(std::size_t dim, std::vector<float> features, std::vector<int> labels)
    : dim_(dim), features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.size() != dim_ * labels_.size()) {
    throw ShapeError("batch feature length " + std::to_string(features_.size()) +
                     " does not match " + std::to_string(labels_.size()) + " rows of dim " +
                     std::to_string(dim_));
  }
}

void Batch::push_back(std::span<const float> x, int label) {
  if (empty() && dim_ == 0) dim_ = x.size();
  if (x.size() != dim_) {
    throw ShapeError("example of dim " + std::to_string(x.size()) + " pushed into batch of dim " +
                     std::to_string(dim_));
  }
  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(label);
}

void Batch::append(const Batch& other) {
  if (other.empty()) return;
  if (empty() && dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) {
    throw ShapeError("cannot append batch of dim " + std::to_string(other.dim_) +
                     " to batch of dim " + std::to_string(dim_));
  }
  features_.insert(features_.end(), other.features_.begin(), other.features_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
}

void Batch::reserve(std::size_t rows) {
  features_.reserve(rows * dim_);
  labels_.reserve(rows);
}

LabeledExample Batch::example(std::size_t i) const {
  const auto r = row(i);
  return {std::vector<float>(r.begin(), r.end()), labels_[i]};
}

Batch Batch::select(std::span<const std::size_t> indices) const {
  Batch out(dim_);
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(row(i), labels_[i]);
  return out;
}

Batch concat(const Batch& a, const Batch& b) {
  Batch out(a.dim() ? a.dim() : b.dim());
  out.reserve(a.size() + b.size());
  out.append(a);
  out.append(b);
  return out;
}

} // namespace screplay
