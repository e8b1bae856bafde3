#include "screplay/tensor.hpp"

#include "screplay/error.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace screplay {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.size() > 2) throw ShapeError("tensor rank above 2: " + shape_string(shape));
  for (auto extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive: " + shape_string(shape));
  }
}

} // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : shape_(std::move(shape)), requires_grad_(requires_grad) {
  validate_shape(shape_);
  data_.assign(shape_size(shape_), T{0});
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : shape_(std::move(shape)), data_(std::move(data)), requires_grad_(requires_grad) {
  validate_shape(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::matrix(std::size_t rows, std::size_t cols, std::vector<T> data,
                            bool requires_grad) {
  return Tensor(Shape{rows, cols}, std::move(data), requires_grad);
}

template <typename T>
std::size_t Tensor<T>::rows() const noexcept {
  return shape_.size() == 2 ? shape_[0] : 1;
}

template <typename T>
std::size_t Tensor<T>::cols() const noexcept {
  if (shape_.empty()) return 1;
  return shape_.back();
}

template <typename T>
T Tensor<T>::item() const {
  if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

template <typename T>
void Tensor<T>::accumulate_grad(std::span<const T> delta) {
  if (delta.size() != data_.size()) {
    throw ShapeError("gradient length does not match tensor " + shape_string(shape_));
  }
  if (grad_.empty()) grad_.assign(data_.size(), T{0});
  for (std::size_t i = 0; i < delta.size(); ++i) grad_[i] += delta[i];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(grad_.begin(), grad_.end(), T{0});
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace screplay
