#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace screplay {

struct LabeledExample {
  std::vector<float> x;
  int label = 0;

  bool operator==(const LabeledExample&) const = default;
};

/// Row-major block of inputs with a parallel label array.
class Batch {
public:
  Batch() = default;
  explicit Batch(std::size_t dim) : dim_(dim) {}
  Batch(std::size_t dim, std::vector<float> features, std::vector<int> labels);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const float> row(std::size_t i) const { return {features_.data() + i * dim_, dim_}; }
  std::span<float> row(std::size_t i) { return {features_.data() + i * dim_, dim_}; }
  int label(std::size_t i) const { return labels_[i]; }

  const std::vector<float>& features() const noexcept { return features_; }
  std::vector<float>& features() noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  void push_back(std::span<const float> x, int label);
  void push_back(const LabeledExample& ex) { push_back(ex.x, ex.label); }
  void append(const Batch& other);
  void reserve(std::size_t rows);

  LabeledExample example(std::size_t i) const;
  /// Rows selected by index, in the given order.
  Batch select(std::span<const std::size_t> indices) const;

  bool operator==(const Batch&) const = default;

private:
  std::size_t dim_ = 0;
  std::vector<float> features_;
  std::vector<int> labels_;
};

/// Plain concatenation: rows of `a` followed by rows of `b`.
Batch concat(const Batch& a, const Batch& b);

} // namespace screplay
