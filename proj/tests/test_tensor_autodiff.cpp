#include "oracles.hpp"

#include "screplay/autodiff.hpp"
#include "screplay/error.hpp"
#include "screplay/gradcheck.hpp"
#include "screplay/losses.hpp"
#include "screplay/optim.hpp"
#include "screplay/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace screplay;

namespace {

Tensor<double> random_matrix(std::size_t r, std::size_t c, Rng& rng, bool grad = true) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = standard_normal(rng);
  return Tensor<double>(Shape{r, c}, std::move(v), grad);
}

oracle::Matrix rows_of(const Tensor<double>& t) {
  oracle::Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  }
  return m;
}

} // namespace

TEST_CASE("tensor shape invariants") {
  Tensor<float> t(Shape{2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  Tensor<float> row(Shape{4});
  CHECK(row.rows() == 1);
  CHECK(row.cols() == 4);
  CHECK(Tensor<double>::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 2}, {1.f, 2.f, 3.f}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>(Shape{0, 2}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>(Shape{1, 1, 1}), ShapeError);

  Tensor<float> p(Shape{2}, {1.f, 2.f}, true);
  CHECK_FALSE(p.has_grad());
  const float delta[] = {0.5f, 0.25f};
  p.accumulate_grad(delta);
  p.accumulate_grad(delta);
  CHECK(p.grad()[0] == 1.0f);
  CHECK(p.grad()[1] == 0.5f);
  p.zero_grad();
  CHECK(p.grad()[0] == 0.0f);
  const float wrong[] = {1.f};
  CHECK_THROWS_AS(p.accumulate_grad(wrong), ShapeError);

  const auto d = p.cast<double>();
  CHECK(d.values() == std::vector<double>{1.0, 2.0});
  CHECK(d.requires_grad());
}

TEST_CASE("forward: identity and affine graphs") {
  Graph<double> g;
  auto x = g.input(Tensor<double>(Shape{3}, {1, 2, 3}));
  CHECK(g.tensor(x).values() == std::vector<double>{1, 2, 3});

  Tensor<double> w(Shape{2, 2}, {1, 0, 0, 1});
  Tensor<double> b(Shape{2}, {0, 0});
  auto y = linear(g.input(Tensor<double>(Shape{1, 2}, {3, 4})), g.param(w), g.param(b));
  CHECK(g.value(y)[0] == 3.0);
  CHECK(g.value(y)[1] == 4.0);
}

TEST_CASE("forward: two-layer MLP matches straight-line evaluation") {
  auto rng = make_rng(11, "test-mlp");
  auto w1 = random_matrix(6, 4, rng);
  auto b1 = random_matrix(1, 6, rng);
  auto w2 = random_matrix(3, 6, rng);
  auto b2 = random_matrix(1, 3, rng);
  b1 = Tensor<double>(Shape{6}, b1.values(), true);
  b2 = Tensor<double>(Shape{3}, b2.values(), true);
  auto x = random_matrix(5, 4, rng, false);

  Graph<double> g;
  auto h = relu(linear(g.input(x), g.param(w1), g.param(b1)));
  auto out = linear(h, g.param(w2), g.param(b2));

  const auto xs = rows_of(x);
  for (std::size_t r = 0; r < 5; ++r) {
    const auto hidden = oracle::relu(oracle::affine(rows_of(w1), b1.values(), xs[r]));
    const auto expect = oracle::affine(rows_of(w2), b2.values(), hidden);
    for (std::size_t c = 0; c < 3; ++c) CHECK(g.value(out)[r * 3 + c] == doctest::Approx(expect[c]).epsilon(1e-12));
  }
}

TEST_CASE("backward: analytic derivatives") {
  SUBCASE("x.x at 3") {
    Tensor<double> x = Tensor<double>::scalar(3.0, true);
    Graph<double> g;
    auto v = g.param(x);
    g.backward(mul(v, v));
    CHECK(x.grad()[0] == 6.0);
  }
  SUBCASE("sum(relu(x)) at [-1, 2]") {
    Tensor<double> x(Shape{2}, {-1.0, 2.0}, true);
    Graph<double> g;
    g.backward(sum(relu(g.param(x))));
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 1.0);
  }
  SUBCASE("relu subgradient at zero is 0") {
    Tensor<double> x(Shape{1}, {0.0}, true);
    Graph<double> g;
    g.backward(sum(relu(g.param(x))));
    CHECK(x.grad()[0] == 0.0);
  }
  SUBCASE("repeated backward accumulates") {
    Tensor<double> x = Tensor<double>::scalar(2.0, true);
    Graph<double> g;
    auto v = g.param(x);
    auto y = mul(v, v);
    g.backward(y);
    g.backward(y);
    CHECK(x.grad()[0] == 8.0);
  }
  SUBCASE("each node is visited once") {
    Tensor<double> x = Tensor<double>::scalar(2.0, true);
    Graph<double> g;
    auto v = g.param(x);
    auto y = add(mul(v, v), v);
    g.backward(y);
    CHECK(g.last_backward_visits() <= g.size());
    CHECK(x.grad()[0] == 5.0);
  }
}

TEST_CASE("backward errors") {
  Graph<double> g;
  auto v = g.input(Tensor<double>(Shape{2}, {1, 2}));
  CHECK_THROWS_AS(g.backward(v), ContractError);
  Graph<double> other;
  auto s = other.input(Tensor<double>::scalar(1.0));
  CHECK_THROWS_AS(g.backward(s), StateError);
  CHECK_THROWS_AS(g.backward(Var<double>{&g, 99}), StateError);
}

TEST_CASE("shape mismatches raise shape errors") {
  Graph<double> g;
  auto a = g.input(Tensor<double>(Shape{2, 3}));
  auto b = g.input(Tensor<double>(Shape{2, 2}));
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(add_bias(a, g.input(Tensor<double>(Shape{2}))), ShapeError);
}

TEST_CASE("non-finite values are surfaced when checking is on") {
  Graph<double> g(true);
  auto x = g.input(Tensor<double>(Shape{1}, std::vector<double>{0.0}));
  CHECK_THROWS_AS(log(x), NumericError);
  Graph<double> lax(false);
  auto y = lax.input(Tensor<double>(Shape{1}, std::vector<double>{0.0}));
  CHECK(std::isinf(lax.value(log(y))[0]));
}

TEST_CASE("l2_normalize") {
  Graph<double> g;
  auto y = l2_normalize(g.input(Tensor<double>(Shape{1, 2}, {3, 4})));
  CHECK(g.value(y)[0] == doctest::Approx(0.6));
  CHECK(g.value(y)[1] == doctest::Approx(0.8));

  auto u = l2_normalize(g.input(Tensor<double>(Shape{1, 3}, {0, 1, 0})));
  CHECK(g.tensor(u).values() == std::vector<double>{0, 1, 0});

  CHECK_THROWS_AS(l2_normalize(g.input(Tensor<double>(Shape{2, 2}, {1, 1, 0, 0}))), DegenerateInputError);

  auto rng = make_rng(3, "test-normalize");
  for (int t = 0; t < 50; ++t) {
    std::vector<float> v(7);
    for (auto& x : v) x = static_cast<float>(10.0 * standard_normal(rng));
    Graph<float> gf;
    auto once = l2_normalize(gf.input(Tensor<float>(Shape{1, 7}, v)));
    auto twice = l2_normalize(once);
    double norm = 0.0;
    for (std::size_t k = 0; k < 7; ++k) {
      CHECK(std::abs(gf.value(once)[k] - gf.value(twice)[k]) <= 1e-7);
      norm += double(gf.value(once)[k]) * gf.value(once)[k];
    }
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-6);
  }
}

TEST_CASE("grad_check") {
  SUBCASE("quadratic") {
    Tensor<double> x(Shape{3}, {0.5, -1.25, 2.0}, true);
    Tensor<double>* leaves[] = {&x};
    const auto r = grad_check(
        [&](Graph<double>& g) {
          auto v = g.param(x);
          return add(dot(v, v), sum(scale(v, 3.0)));
        },
        leaves, 1e-9);
    CHECK(r.passed);
    CHECK(r.max_relative_error < 1e-9);
    CHECK(r.entries_checked == 3);
  }
  SUBCASE("constant graph") {
    Tensor<double> x(Shape{2}, {1.0, 2.0}, true);
    Tensor<double>* leaves[] = {&x};
    const auto r = grad_check([&](Graph<double>& g) { return sum(g.input(Tensor<double>(Shape{2}, {4, 5}))); },
                              leaves, 1e-12);
    CHECK(r.max_relative_error == 0.0);
    CHECK(r.passed);
  }
  SUBCASE("scl loss on 8 random projections") {
    auto rng = make_rng(5, "test-gradcheck-scl");
    std::vector<double> v(8 * 4);
    for (std::size_t r = 0; r < 8; ++r) {
      std::vector<double> row(4);
      for (auto& x : row) x = standard_normal(rng);
      row = oracle::normalize(row);
      std::copy(row.begin(), row.end(), v.begin() + static_cast<long>(r * 4));
    }
    Tensor<double> z(Shape{8, 4}, v, true);
    const std::vector<int> labels{0, 1, 2, 0, 0, 1, 2, 0};
    Tensor<double>* leaves[] = {&z};
    const auto r = grad_check(
        [&](Graph<double>& g) { return scl_loss(g.param(z), std::span<const int>(labels), Temperature(0.1)); },
        leaves, 1e-5);
    CHECK(r.passed);
  }
  SUBCASE("random 2-layer MLP loss") {
    auto rng = make_rng(8, "test-gradcheck-mlp");
    auto w1 = random_matrix(5, 3, rng);
    Tensor<double> b1(Shape{5}, std::vector<double>(5, 0.1), true);
    auto w2 = random_matrix(2, 5, rng);
    auto x = random_matrix(4, 3, rng, false);
    Tensor<double>* leaves[] = {&w1, &b1, &w2};
    const auto r = grad_check(
        [&](Graph<double>& g) {
          auto h = relu(linear(g.input(x), g.param(w1), g.param(b1)));
          auto o = matmul_nt(h, g.param(w2));
          return mean(mul(o, o));
        },
        leaves, 1e-5);
    CHECK(r.passed);
  }
  SUBCASE("leaves must track gradients") {
    Tensor<double> x(Shape{1}, {1.0}, false);
    Tensor<double>* leaves[] = {&x};
    CHECK_THROWS_AS(grad_check([&](Graph<double>& g) { return sum(g.param(x)); }, leaves, 1e-5), ContractError);
  }
}

TEST_CASE("every primitive passes a finite-difference check") {
  auto rng = make_rng(21, "test-primitives");
  auto a = random_matrix(3, 4, rng);
  auto b = random_matrix(3, 4, rng);
  auto c = random_matrix(4, 2, rng);
  Tensor<double> bias(Shape{4}, {0.1, -0.2, 0.3, 0.4}, true);
  for (auto& v : a.values()) v = std::abs(v) + 0.5; // keep log/exp well conditioned and relu away from 0
  Tensor<double>* leaves[] = {&a, &b, &c, &bias};
  const auto r = grad_check(
      [&](Graph<double>& g) {
        auto va = g.param(a);
        auto vb = g.param(b);
        auto t1 = sum(matmul(va, g.param(c)));
        auto t2 = sum(matmul_nt(va, vb));
        auto t3 = mean(mul(sub(va, vb), add_bias(vb, g.param(bias))));
        auto t4 = sum(row_sum(log(exp(scale(relu(va), 0.5)))));
        auto t5 = dot(l2_normalize(va), vb);
        return add(add(add(t1, t2), add(t3, t4)), t5);
      },
      leaves, 1e-6);
  CHECK(r.passed);
}

TEST_CASE("sgd_step") {
  SUBCASE("one step") {
    Tensor<double> p = Tensor<double>::scalar(1.0, true);
    const double g2[] = {2.0};
    p.accumulate_grad(g2);
    Tensor<double>* params[] = {&p};
    sgd_step<double>(params, 0.1);
    CHECK(p.item() == doctest::Approx(0.8));
    CHECK(p.grad()[0] == 0.0);
  }
  SUBCASE("zero learning rate") {
    Tensor<float> p(Shape{2}, {1.f, -3.f}, true);
    const float g2[] = {5.f, 7.f};
    p.accumulate_grad(g2);
    Tensor<float>* params[] = {&p};
    sgd_step<float>(params, 0.0f);
    CHECK(p.values() == std::vector<float>{1.f, -3.f});
  }
  SUBCASE("missing gradient") {
    Tensor<float> p(Shape{1}, {1.f}, true);
    Tensor<float>* params[] = {&p};
    CHECK_THROWS_AS(sgd_step<float>(params, 0.1f), StateError);
  }
  SUBCASE("converges on (p-5)^2") {
    Tensor<double> p = Tensor<double>::scalar(0.0, true);
    Tensor<double>* params[] = {&p};
    for (int step = 0; step < 100; ++step) {
      Graph<double> g;
      auto d = sub(g.param(p), g.input(Tensor<double>::scalar(5.0)));
      g.backward(mul(d, d));
      sgd_step<double>(params, 0.1);
    }
    // p_k - 5 = -5 * 0.8^k
    CHECK(std::abs(p.item() - 5.0) < 1e-3);
    CHECK(p.item() - 5.0 == doctest::Approx(-5.0 * std::pow(0.8, 100)).epsilon(1e-9));
  }
}

TEST_CASE("rng helpers") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  auto rng = make_rng(4, "test-rng");
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 60000; ++i) ++hits[uniform_index(rng, 0, 5)];
  for (int h : hits) CHECK(std::abs(h - 10000) < 400);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform_unit(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(uniform_index(rng, 7, 7) == 7);
}
