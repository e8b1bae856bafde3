#pragma once

#include "screplay/tensor.hpp"

#include <span>

namespace screplay {

/// Plain SGD: p <- p - lr * grad(p) for every parameter, then zeroes the
/// gradients. Throws StateError if a parameter has no gradient.
template <typename T>
void sgd_step(std::span<Tensor<T>* const> params, T lr);

} // namespace screplay
