#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace screplay {

using Shape = std::vector<std::size_t>;

/// Training runs in 32-bit reals; gradient checks run end to end in 64-bit.
enum class Precision { train32, check64 };

template <Precision P> struct precision_scalar;
template <> struct precision_scalar<Precision::train32> { using type = float; };
template <> struct precision_scalar<Precision::check64> { using type = double; };

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of rank 0, 1 or 2.
///
/// Rank-1 tensors behave as row vectors ([n] is viewed as 1 x n) wherever an
/// operation expects a matrix; rank-0 tensors are scalars.
template <typename T>
class Tensor {
public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor scalar(T value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<T> data,
                       bool requires_grad = false);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  T at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  T item() const;

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on) noexcept { requires_grad_ = on; }

  bool has_grad() const noexcept { return !grad_.empty(); }
  std::span<T> grad() noexcept { return grad_; }
  std::span<const T> grad() const noexcept { return grad_; }
  /// Adds `delta` into the gradient accumulator, allocating it on first use.
  void accumulate_grad(std::span<const T> delta);
  void zero_grad();
  void clear_grad() { grad_.clear(); }

  /// Element-wise conversion into another precision; gradients are not copied.
  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()), requires_grad_);
  }

private:
  Shape shape_;
  std::vector<T> data_;
  bool requires_grad_ = false;
  std::vector<T> grad_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace screplay
