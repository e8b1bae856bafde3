#include "screplay/optim.hpp"

#include "screplay/error.hpp"

namespace screplay {

template <typename T>
void sgd_step(std::span<Tensor<T>* const> params, T lr) {
  for (auto* p : params) {
    if (!p->has_grad()) {
      throw StateError("sgd_step on parameter " + shape_string(p->shape()) + " without gradient");
    }
  }
  for (auto* p : params) {
    auto values = p->data();
    const auto grad = p->grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * grad[i];
    p->zero_grad();
  }
}

template void sgd_step<float>(std::span<Tensor<float>* const>, float);
template void sgd_step<double>(std::span<Tensor<double>* const>, double);

} // namespace screplay
