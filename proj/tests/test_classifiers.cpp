#include "oracles.hpp"

#include "screplay/classifiers.hpp"
#include "screplay/error.hpp"
#include "screplay/rng.hpp"

#include <doctest.h>

using namespace screplay;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.input_dim = 3;
  cfg.encoder_hidden = {6};
  cfg.embed_dim = 2;
  cfg.proj_kind = ProjKind::none;
  cfg.proj_dim = 2;
  return cfg;
}

// Encoder whose output is the first two input coordinates: one identity-like
// hidden layer on the positive part, then a difference layer.
ModelState passthrough_model() {
  auto cfg = tiny_config();
  cfg.encoder_hidden = {4};
  ModelState m(cfg, 0);
  auto& h = m.encoder()[0];
  for (auto& w : h.weight.values()) w = 0.f;
  for (auto& b : h.bias.values()) b = 0.f;
  h.weight.at(0, 0) = 1.f;
  h.weight.at(1, 0) = -1.f;
  h.weight.at(2, 1) = 1.f;
  h.weight.at(3, 1) = -1.f;
  auto& o = m.encoder()[1];
  for (auto& w : o.weight.values()) w = 0.f;
  for (auto& b : o.bias.values()) b = 0.f;
  o.weight.at(0, 0) = 1.f;
  o.weight.at(0, 1) = -1.f;
  o.weight.at(1, 2) = 1.f;
  o.weight.at(1, 3) = -1.f;
  return m;
}

Batch rows(const std::vector<std::vector<float>>& xs, const std::vector<int>& labels) {
  Batch b(xs[0].size());
  for (std::size_t i = 0; i < xs.size(); ++i) b.push_back(xs[i], labels[i]);
  return b;
}

std::vector<double> embedding(const ModelState& m, const Batch& b, std::size_t i) {
  const auto flat = embed_batch(m, b);
  const auto d = m.config().embed_dim;
  return {flat.begin() + static_cast<long>(i * d), flat.begin() + static_cast<long>((i + 1) * d)};
}

} // namespace

TEST_CASE("prototype means") {
  const auto m = passthrough_model();
  SUBCASE("one sample per class") {
    const auto b = rows({{0.6f, 0.8f, 0.f}, {0.f, -1.f, 0.f}}, {4, 7});
    const auto p = compute_prototypes(m, b);
    CHECK(p.classes() == std::vector<int>{4, 7});
    CHECK(p.means.at(4)[0] == doctest::Approx(0.6));
    CHECK(p.means.at(4)[1] == doctest::Approx(0.8));
    CHECK(p.counts.at(7) == 1);
  }
  SUBCASE("two-point mean is not renormalized") {
    const auto p = compute_prototypes(m, rows({{1.f, 0.f, 0.f}, {0.f, 1.f, 0.f}}, {2, 2}));
    CHECK(p.means.at(2)[0] == doctest::Approx(0.5));
    CHECK(p.means.at(2)[1] == doctest::Approx(0.5));
  }
  SUBCASE("empty snapshot") {
    CHECK_THROWS_AS(compute_prototypes(m, Batch(3)), NoPrototypesError);
  }
}

TEST_CASE("prototype means agree with a group-by oracle") {
  auto rng = make_rng(31, "test-protos");
  ModelState m(tiny_config(), 4);
  Batch b(3);
  for (int i = 0; i < 20; ++i) {
    std::vector<float> x(3);
    for (auto& v : x) v = static_cast<float>(standard_normal(rng));
    b.push_back(x, static_cast<int>(uniform_index(rng, 0, 4)));
  }
  oracle::Matrix emb;
  for (std::size_t i = 0; i < b.size(); ++i) emb.push_back(embedding(m, b, i));
  const auto expect = oracle::group_means(emb, b.labels());
  const auto p = compute_prototypes(m, b);
  CHECK(p.means.size() == expect.size());
  for (const auto& [label, mean] : expect) {
    for (std::size_t k = 0; k < mean.size(); ++k) CHECK(std::abs(p.means.at(label)[k] - mean[k]) <= 1e-6);
  }
}

TEST_CASE("ncm classification") {
  const auto m = passthrough_model();
  const auto protos = compute_prototypes(
      m, rows({{1.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, {-1.f, 0.f, 0.f}}, {0, 3, 5}));

  CHECK(ncm_classify(protos, m, LabeledExample{{0.f, 2.f, 0.f}, 0}) == 3);
  CHECK(ncm_classify(protos, m, LabeledExample{{-3.f, 0.1f, 0.f}, 0}) == 5);

  // Equidistant from classes 0 and 3: lowest label wins.
  const float e[] = {0.70710678f, 0.70710678f};
  CHECK(nearest_prototype(protos, e) == 0);

  const auto single = compute_prototypes(m, rows({{0.f, 1.f, 0.f}}, {9}));
  CHECK(ncm_classify(single, m, LabeledExample{{5.f, -1.f, 2.f}, 0}) == 9);

  ModelState moved = m;
  moved.advance_step();
  CHECK_THROWS_AS(ncm_classify(protos, moved, LabeledExample{{1.f, 0.f, 0.f}, 0}), StalenessError);

  const auto batch = rows({{0.f, 2.f, 0.f}, {1.f, 0.1f, 0.f}}, {0, 0});
  CHECK(ncm_classify(protos, m, batch) == std::vector<int>{3, 0});
}

TEST_CASE("ncm matches an exhaustive distance scan") {
  auto rng = make_rng(37, "test-ncm-oracle");
  for (int t = 0; t < 200; ++t) {
    PrototypeSet p;
    oracle::Matrix centers;
    std::vector<int> labels;
    const std::size_t d = uniform_index(rng, 1, 6);
    for (int c = 0; c < 5; ++c) {
      std::vector<double> mu(d);
      for (auto& v : mu) v = static_cast<double>(static_cast<float>(standard_normal(rng)));
      p.means[c * 2] = mu;
      p.counts[c * 2] = 1;
      centers.push_back(mu);
      labels.push_back(c * 2);
    }
    std::vector<float> q(d);
    for (auto& v : q) v = static_cast<float>(standard_normal(rng));
    const auto expect = labels[oracle::argmin_distance(centers, {q.begin(), q.end()})];
    CHECK(nearest_prototype(p, q) == expect);
  }
}

TEST_CASE("ncm is unaffected by the softmax head and by uniform scaling") {
  auto rng = make_rng(41, "test-ncm-head");
  ModelState m(tiny_config(), 8);
  const int cls[] = {0, 1, 2};
  m.expand_head(cls);
  Batch b(3);
  for (int i = 0; i < 12; ++i) {
    std::vector<float> x(3);
    for (auto& v : x) v = static_cast<float>(standard_normal(rng));
    b.push_back(x, i % 3);
  }
  const auto protos = compute_prototypes(m, b);
  const auto before = ncm_classify(protos, m, b);
  for (auto* p : m.head_params()) {
    for (auto& v : p->values()) v = static_cast<float>(standard_normal(rng));
  }
  CHECK(ncm_classify(protos, m, b) == before);

  PrototypeSet scaled = protos;
  for (auto& [label, mu] : scaled.means) {
    for (auto& v : mu) v *= 4.0;
  }
  const auto flat = embed_batch(m, b);
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::vector<float> e(flat.begin() + static_cast<long>(2 * i), flat.begin() + static_cast<long>(2 * i + 2));
    const int plain = nearest_prototype(protos, e);
    for (auto& v : e) v *= 4.f;
    CHECK(nearest_prototype(scaled, e) == plain);
  }
}

TEST_CASE("softmax classification") {
  auto rng = make_rng(43, "test-softmax");
  ModelState m(tiny_config(), 2);
  const LabeledExample x{{0.3f, -0.2f, 0.9f}, 0};
  CHECK_THROWS_AS(softmax_classify(m, x), NoClassesError);

  const int cls[] = {0, 1, 2, 3};
  m.expand_head(cls);
  CHECK(softmax_classify(m, x) == 0);

  m.head().bias.values()[2] = 50.f;
  CHECK(softmax_classify(m, x) == 2);

  for (int t = 0; t < 100; ++t) {
    for (auto* p : m.head_params()) {
      for (auto& v : p->values()) v = static_cast<float>(standard_normal(rng));
    }
    LabeledExample q{{0.f, 0.f, 0.f}, 0};
    for (auto& v : q.x) v = static_cast<float>(standard_normal(rng));
    const auto r = embedding(m, Batch(3, q.x, {0}), 0);
    std::vector<double> scores(4);
    for (std::size_t c = 0; c < 4; ++c) {
      // Same float arithmetic order as a plain dot product plus bias.
      float s = 0.f;
      for (std::size_t k = 0; k < 2; ++k) s += m.head().weight.at(c, k) * static_cast<float>(r[k]);
      scores[c] = s + m.head().bias.values()[c];
    }
    CHECK(softmax_classify(m, q) == static_cast<int>(oracle::argmax(scores)));
  }
}

TEST_CASE("softmax ties go to the lowest label") {
  ModelState m(tiny_config(), 2);
  const int cls[] = {6, 2};
  m.expand_head(cls);
  CHECK(softmax_classify(m, LabeledExample{{1.f, 1.f, 1.f}, 0}) == 2);
}
