#include "screplay/losses.hpp"

#include "screplay/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace screplay {

Temperature::Temperature(double tau) : tau_(tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ContractError("temperature must be positive, got " + std::to_string(tau));
  }
}

template <typename T>
MultiviewBatch<T> MultiviewBatch<T>::paired(Var<T> z, std::span<const int> base_labels) {
  const std::size_t b = base_labels.size();
  const auto& shape = z.graph->shape(z);
  const std::size_t rows = shape.size() == 2 ? shape[0] : 1;
  if (rows != 2 * b) {
    throw ShapeError("multiview batch expects " + std::to_string(2 * b) + " rows, got " +
                     std::to_string(rows));
  }
  MultiviewBatch mv;
  mv.projections = z;
  mv.labels.assign(base_labels.begin(), base_labels.end());
  mv.labels.insert(mv.labels.end(), base_labels.begin(), base_labels.end());
  mv.origin.assign(b, ViewOrigin::raw);
  mv.origin.insert(mv.origin.end(), b, ViewOrigin::augmented);
  return mv;
}

template struct MultiviewBatch<float>;
template struct MultiviewBatch<double>;

template <typename T>
Var<T> scl_loss(Var<T> z, std::span<const int> labels, Temperature tau) {
  if (!z.graph) throw StateError("scl_loss on a detached variable");
  auto& g = *z.graph;
  const auto& shape = g.shape(z);
  if (shape.size() != 2) throw ShapeError("scl_loss expects a matrix of projections");
  const std::size_t n = shape[0], d = shape[1];
  if (labels.empty()) throw EmptyBatchError("scl_loss on an empty batch");
  if (labels.size() != n) {
    throw ShapeError("scl_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  if (n < 2) throw ContractError("scl_loss needs at least two rows");

  const auto zv = g.value(z);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) sq += static_cast<double>(zv[i * d + k]) * zv[i * d + k];
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-4) {
      throw ContractError("scl_loss: row " + std::to_string(i) + " is not unit-norm");
    }
  }

  const T inv_tau = static_cast<T>(1.0 / tau.value());
  // sim[i][j] = z_i . z_j / tau
  std::vector<T> sim(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      T acc{0};
      for (std::size_t k = 0; k < d; ++k) acc += zv[i * d + k] * zv[j * d + k];
      sim[i * n + j] = sim[j * n + i] = acc * inv_tau;
    }
  }

  // coeff = dL/dsim, zero on the diagonal and on anchors without positives.
  std::vector<T> coeff(n * n, T{0});
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positives = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) ++positives;
    }
    if (positives == 0) continue;
    const T* row = &sim[i * n];
    T peak = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) peak = std::max(peak, row[j]);
    }
    T denom{0};
    T* c = &coeff[i * n];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      c[j] = std::exp(row[j] - peak);
      denom += c[j];
    }
    const T log_denom = peak + std::log(denom);
    const T inv_pos = T{1} / static_cast<T>(positives);
    T pos_sum{0};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      c[j] /= denom;
      if (labels[j] == labels[i]) {
        pos_sum += row[j];
        c[j] -= inv_pos;
      }
    }
    total += log_denom - pos_sum * inv_pos;
  }

  const std::size_t iz = z.id;
  return g.record("scl_loss", Shape{}, {total}, {iz},
                  [iz, n, d, inv_tau, coeff = std::move(coeff)](Graph<T>& gr, std::size_t self) {
                    auto dz = gr.accumulator(iz);
                    if (dz.empty()) return;
                    const T up = gr.upstream(self)[0];
                    const auto zs = gr.value(iz);
                    // dL/dz_i = (sum_j (c_ij + c_ji) z_j) / tau
                    for (std::size_t i = 0; i < n; ++i) {
                      T* out = &dz[i * d];
                      for (std::size_t j = 0; j < n; ++j) {
                        const T w = (coeff[i * n + j] + coeff[j * n + i]) * inv_tau * up;
                        if (w == T{0}) continue;
                        const T* zj = &zs[j * d];
                        for (std::size_t k = 0; k < d; ++k) out[k] += w * zj[k];
                      }
                    }
                  });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> targets) {
  if (!logits.graph) throw StateError("cross_entropy on a detached variable");
  auto& g = *logits.graph;
  const auto& shape = g.shape(logits);
  const std::size_t n = shape.size() == 2 ? shape[0] : 1;
  const std::size_t c = shape.empty() ? 1 : shape.back();
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= c) {
      throw ContractError("cross_entropy label " + std::to_string(t) + " outside [0, " +
                          std::to_string(c) + ")");
    }
  }
  const auto lv = g.value(logits);
  std::vector<T> probs(n * c);
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = &lv[i * c];
    const T peak = *std::max_element(row, row + c);
    T denom{0};
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(row[j] - peak);
      denom += probs[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= denom;
    total += peak + std::log(denom) - row[targets[i]];
  }
  const T inv_n = T{1} / static_cast<T>(n);
  std::vector<int> labels(targets.begin(), targets.end());
  const std::size_t il = logits.id;
  return g.record("cross_entropy", Shape{}, {total * inv_n}, {il},
                  [il, c, inv_n, probs = std::move(probs),
                   labels = std::move(labels)](Graph<T>& gr, std::size_t self) {
                    auto dl = gr.accumulator(il);
                    if (dl.empty()) return;
                    const T up = gr.upstream(self)[0] * inv_n;
                    for (std::size_t i = 0; i < labels.size(); ++i) {
                      for (std::size_t j = 0; j < c; ++j) {
                        const T onehot = static_cast<int>(j) == labels[i] ? T{1} : T{0};
                        dl[i * c + j] += up * (probs[i * c + j] - onehot);
                      }
                    }
                  });
}

template Var<float> scl_loss(Var<float>, std::span<const int>, Temperature);
template Var<double> scl_loss(Var<double>, std::span<const int>, Temperature);
template Var<float> cross_entropy(Var<float>, std::span<const int>);
template Var<double> cross_entropy(Var<double>, std::span<const int>);

} // namespace screplay
