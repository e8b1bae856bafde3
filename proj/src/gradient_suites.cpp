#include "screplay/gradient_suites.hpp"

#include "screplay/gradcheck.hpp"
#include "screplay/losses.hpp"
#include "screplay/model.hpp"
#include "screplay/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace screplay {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Unit rows whose coordinates stay below 0.99 in magnitude, so a
// finite-difference step keeps every row within the unit-norm contract.
Tensor<double> random_unit_rows(std::size_t rows, std::size_t dim, Rng& rng) {
  std::vector<double> v(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (;;) {
      double sq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        v[r * dim + k] = standard_normal(rng);
        sq += v[r * dim + k] * v[r * dim + k];
      }
      const double norm = std::sqrt(sq);
      if (norm < 1e-6) continue;
      double peak = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        v[r * dim + k] /= norm;
        peak = std::max(peak, std::abs(v[r * dim + k]));
      }
      if (peak < 0.99) break;
    }
  }
  return Tensor<double>(Shape{rows, dim}, std::move(v), true);
}

// Smallest |pre-activation| over every affine node of the graph. Finite
// differences straddling a ReLU kink measure a one-sided slope, so trials too
// close to one are redrawn.
double kink_margin(const Graph<double>& g) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < g.size(); ++id) {
    if (!g.node_name(id).starts_with("add_bias#")) continue;
    for (double v : g.value(id)) margin = std::min(margin, std::abs(v));
  }
  return margin;
}

constexpr double kKinkMargin = 1e-3;

void absorb(GradientSuiteResult& out, const GradCheckReport& r) {
  out.max_relative_error = std::max(out.max_relative_error, r.max_relative_error);
  out.entries += r.entries_checked;
  ++out.trials;
}

} // namespace

GradientSuiteResult scl_gradient_suite(std::size_t trials, std::uint64_t seed, double tau) {
  const auto start = Clock::now();
  GradientSuiteResult out{"scl_loss", 0, 0, 0.0, kGradientTolerance, 0.0, false};
  auto rng = make_rng(seed, "grad-suite-scl");
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t b = uniform_index(rng, 1, 8);
    const std::size_t dim = uniform_index(rng, 2, 8);
    const int classes = static_cast<int>(uniform_index(rng, 1, 4));
    std::vector<int> base(b);
    for (auto& y : base) y = static_cast<int>(uniform_index(rng, 0, static_cast<std::uint64_t>(classes - 1)));
    std::vector<int> labels = base;
    labels.insert(labels.end(), base.begin(), base.end());
    auto z = random_unit_rows(2 * b, dim, rng);
    Tensor<double>* leaves[] = {&z};
    const auto report = grad_check(
        [&](Graph<double>& g) { return scl_loss(g.param(z), std::span<const int>(labels), Temperature(tau)); },
        leaves, kGradientTolerance, kFiniteDifferenceStep);
    absorb(out, report);
  }
  out.passed = out.max_relative_error < out.tolerance;
  out.seconds = seconds_since(start);
  return out;
}

GradientSuiteResult cross_entropy_gradient_suite(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  GradientSuiteResult out{"cross_entropy", 0, 0, 0.0, kGradientTolerance, 0.0, false};
  auto rng = make_rng(seed, "grad-suite-ce");
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = uniform_index(rng, 1, 16);
    const std::size_t c = uniform_index(rng, 1, 8);
    std::vector<double> values(n * c);
    for (auto& v : values) v = 2.0 * standard_normal(rng);
    Tensor<double> logits(Shape{n, c}, std::move(values), true);
    std::vector<int> targets(n);
    for (auto& y : targets) y = static_cast<int>(uniform_index(rng, 0, c - 1));
    Tensor<double>* leaves[] = {&logits};
    const auto report = grad_check(
        [&](Graph<double>& g) { return cross_entropy(g.param(logits), std::span<const int>(targets)); },
        leaves, kGradientTolerance, kFiniteDifferenceStep, FiniteDifference::central);
    absorb(out, report);
  }
  out.passed = out.max_relative_error < out.tolerance;
  out.seconds = seconds_since(start);
  return out;
}

GradientSuiteResult model_gradient_suite(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  GradientSuiteResult out{"model", 0, 0, 0.0, kGradientTolerance, 0.0, false};
  auto rng = make_rng(seed, "grad-suite-model");
  const ProjKind kinds[] = {ProjKind::mlp, ProjKind::linear, ProjKind::none};
  for (std::size_t t = 0; t < trials; ++t) {
    ModelConfig cfg;
    cfg.input_dim = 5;
    cfg.encoder_hidden = {7};
    cfg.embed_dim = 4;
    cfg.proj_kind = kinds[t % 3];
    cfg.proj_hidden = 6;
    cfg.proj_dim = cfg.proj_kind == ProjKind::none ? cfg.embed_dim : 3;
    cfg.head_classes = 3;
    BasicModel<double> model(cfg, derive_seed(seed, "model-" + std::to_string(t)));
    // Non-zero head so cross-entropy gradients reach the encoder non-trivially.
    for (auto* p : model.head_params()) {
      for (auto& v : p->data()) v = 0.5 * standard_normal(rng);
    }

    const std::size_t b = 4;
    Batch batch(cfg.input_dim);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      batch = Batch(cfg.input_dim);
      std::vector<float> x(cfg.input_dim);
      for (std::size_t i = 0; i < 2 * b; ++i) {
        for (auto& v : x) v = static_cast<float>(standard_normal(rng));
        batch.push_back(x, static_cast<int>(i % b % 3));
      }
      Graph<double> probe(false);
      const auto& frozen = model;
      const auto r = encode(probe, frozen, batch);
      project(probe, frozen, r);
      logits(probe, frozen, r);
      if (kink_margin(probe) > kKinkMargin) break;
    }
    std::vector<int> base(b);
    for (std::size_t i = 0; i < b; ++i) base[i] = batch.label(i);

    const auto params_scl = [&] {
      auto p = model.encoder_params();
      for (auto* q : model.projection_params()) p.push_back(q);
      return p;
    }();
    const auto scl_report = grad_check(
        [&](Graph<double>& g) {
          auto z = project(g, model, encode(g, model, batch));
          return scl_loss(MultiviewBatch<double>::paired(z, base), Temperature(0.1));
        },
        params_scl, kGradientTolerance, kFiniteDifferenceStep);
    absorb(out, scl_report);

    const auto params_ce = [&] {
      auto p = model.encoder_params();
      for (auto* q : model.head_params()) p.push_back(q);
      return p;
    }();
    const auto ce_report = grad_check(
        [&](Graph<double>& g) {
          auto z = logits(g, model, encode(g, model, batch));
          return cross_entropy(z, std::span<const int>(batch.labels()));
        },
        params_ce, kGradientTolerance, kFiniteDifferenceStep);
    absorb(out, ce_report);
  }
  out.passed = out.max_relative_error < out.tolerance;
  out.seconds = seconds_since(start);
  return out;
}

std::vector<GradientSuiteResult> run_gradient_suites(std::uint64_t seed) {
  return {scl_gradient_suite(100, seed), cross_entropy_gradient_suite(100, seed),
          model_gradient_suite(12, seed)};
}

} // namespace screplay
