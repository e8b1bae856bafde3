#include "oracles.hpp"

#include "screplay/algorithms.hpp"
#include "screplay/error.hpp"
#include "screplay/losses.hpp"

#include <doctest.h>

#include <numeric>
#include <set>

using namespace screplay;

namespace {

ModelConfig small_model() {
  ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.encoder_hidden = {12};
  cfg.embed_dim = 5;
  cfg.proj_hidden = 5;
  cfg.proj_dim = 8;
  return cfg;
}

Batch blob_batch(std::size_t n, std::vector<int> classes, Rng& rng, float offset = 0.f) {
  Batch b(6);
  std::vector<float> x(6);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = classes[i % classes.size()];
    for (std::size_t k = 0; k < 6; ++k) x[k] = static_cast<float>(standard_normal(rng)) + (k == std::size_t(y) % 6 ? 3.f : 0.f) + offset;
    b.push_back(x, y);
  }
  return b;
}

std::vector<std::vector<float>> param_values(ModelState& m) {
  std::vector<std::vector<float>> out;
  for (auto* p : m.all_params()) out.push_back(p->values());
  return out;
}

// Records what the buffer handed out so tests can inspect the replay batch.
class SpyRetrieval final : public RetrievalStrategy {
public:
  explicit SpyRetrieval(std::vector<Batch>* log) : log_(log) {}
  std::string name() const override { return "spy"; }
  Batch retrieve(MemoryBuffer& buffer, const Batch&, std::size_t k) override {
    auto b = random_retrieve(buffer, k);
    log_->push_back(b);
    return b;
  }

private:
  std::vector<Batch>* log_;
};

} // namespace

TEST_CASE("method names and config rules") {
  for (auto m : {Method::scr, Method::er, Method::er_ncm, Method::finetune, Method::offline}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("gem"), ConfigError);
  CHECK(parse_scl_reduction("sum") == SclReduction::sum);
  CHECK_THROWS_AS(parse_scl_reduction("max"), ConfigError);

  MethodConfig cfg;
  CHECK(cfg.lr == 0.1);
  CHECK(cfg.stream_batch == 10);
  CHECK(cfg.mem_batch == 100);
  CHECK(cfg.tau == 0.1);
  CHECK(cfg.offline_epochs == 50);
  cfg.mem_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.method = Method::finetune;
  CHECK_NOTHROW(cfg.validate());
  cfg.method = Method::er;
  cfg.mem_size = 50;
  CHECK(MethodConfig{Method::finetune}.normalized().mem_size == 0);
  cfg.tau = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("scr step: cold start and full buffer sizes") {
  auto rng = make_rng(1, "test-scr-sizes");
  MethodConfig cfg;
  cfg.mem_size = 100;
  std::vector<Batch> seen;
  MemoryBuffer mem(100, 3, std::make_unique<SpyRetrieval>(&seen));
  ModelState model(small_model(), 2);
  Augmentor aug(AugmentorSpec{}, 4);

  scr_train_step(model, mem, blob_batch(10, {0, 1}, rng), cfg, aug);
  CHECK(seen.back().size() == 0);
  CHECK(mem.size() == 10);
  CHECK(model.step() == 1);

  for (int i = 0; i < 12; ++i) scr_train_step(model, mem, blob_batch(10, {0, 1}, rng), cfg, aug);
  CHECK(mem.size() == 100);
  scr_train_step(model, mem, blob_batch(10, {0, 1}, rng), cfg, aug);
  CHECK(seen.back().size() == 100);
  CHECK(model.step() == 14);
}

TEST_CASE("scr step matches a scripted replay of the same step") {
  for (auto reduction : {SclReduction::sum, SclReduction::mean}) {
    auto rng = make_rng(2, "test-scr-oracle");
    MethodConfig cfg;
    cfg.mem_size = 30;
    cfg.mem_batch = 20;
    cfg.scl_reduction = reduction;
    ModelState model(small_model(), 5);
    MemoryBuffer mem(30, 6);
    MemoryBuffer twin(30, 6);
    const auto history = blob_batch(40, {0, 1, 2}, rng);
    mem.update(history);
    twin.update(history);
    Augmentor aug(AugmentorSpec{}, 7);
    Augmentor twin_aug = aug;
    ModelState ref = model;
    const auto incoming = blob_batch(10, {2, 3}, rng);

    const float loss = scr_train_step(model, mem, incoming, cfg, aug);

    const Batch replay = random_retrieve(twin, cfg.mem_batch);
    const Batch joint = concat(incoming, replay);
    const Batch views = concat(joint, twin_aug(joint));
    REQUIRE(views.size() == 2 * (10 + 20));
    Graph<float> g;
    auto z = project(g, ref, encode(g, ref, views));
    std::vector<int> labels = joint.labels();
    labels.insert(labels.end(), joint.labels().begin(), joint.labels().end());
    auto l = scl_loss(z, std::span<const int>(labels), Temperature(cfg.tau));
    const double n = reduction == SclReduction::mean ? double(views.size()) : 1.0;
    if (reduction == SclReduction::mean) l = scale(l, 1.0f / static_cast<float>(views.size()));
    g.backward(l);
    CHECK(loss == g.item(l));

    // The loss value against the literal formula, in double.
    oracle::Matrix zs(views.size(), std::vector<double>(8));
    for (std::size_t r = 0; r < views.size(); ++r) {
      for (std::size_t k = 0; k < 8; ++k) zs[r][k] = g.value(z)[r * 8 + k];
    }
    CHECK(double(loss) == doctest::Approx(oracle::scl(zs, labels, cfg.tau) / n).epsilon(1e-4));

    for (auto* p : ref.encoder_params()) {
      for (std::size_t i = 0; i < p->size(); ++i) p->values()[i] -= 0.1f * p->grad()[i];
    }
    for (auto* p : ref.projection_params()) {
      for (std::size_t i = 0; i < p->size(); ++i) p->values()[i] -= 0.1f * p->grad()[i];
    }
    CHECK(param_values(model) == param_values(ref));
    reservoir_update(twin, incoming);
    CHECK(snapshot(mem) == snapshot(twin));
  }
}

TEST_CASE("scr step never touches the softmax head") {
  auto rng = make_rng(3, "test-scr-head");
  auto mcfg = small_model();
  mcfg.head_classes = 4;
  ModelState model(mcfg, 1);
  for (auto* p : model.head_params()) {
    for (auto& v : p->values()) v = static_cast<float>(standard_normal(rng));
  }
  const auto head = model.head().weight.values();
  MemoryBuffer mem(50, 2);
  Augmentor aug(AugmentorSpec{}, 3);
  for (int i = 0; i < 5; ++i) scr_train_step(model, mem, blob_batch(10, {0, 1}, rng), MethodConfig{}, aug);
  CHECK(model.head().weight.values() == head);
}

TEST_CASE("replay never contains the current batch") {
  auto rng = make_rng(4, "test-replay-order");
  std::vector<Batch> seen;
  MemoryBuffer mem(20, 3, std::make_unique<SpyRetrieval>(&seen));
  ModelState model(small_model(), 2);
  MethodConfig cfg;
  cfg.method = Method::er;
  cfg.mem_size = 20;
  for (int step = 0; step < 10; ++step) {
    const auto incoming = blob_batch(10, {0, 1}, rng, static_cast<float>(100 * (step + 1)));
    er_train_step(model, mem, incoming, cfg);
    std::set<std::vector<float>> now;
    for (std::size_t i = 0; i < incoming.size(); ++i) now.insert({incoming.row(i).begin(), incoming.row(i).end()});
    const auto& replay = seen.back();
    for (std::size_t i = 0; i < replay.size(); ++i) {
      CHECK(now.count({replay.row(i).begin(), replay.row(i).end()}) == 0);
    }
  }
}

TEST_CASE("er step: head growth and scripted replay") {
  auto rng = make_rng(5, "test-er");
  MethodConfig cfg;
  cfg.method = Method::er;
  cfg.mem_size = 30;
  cfg.mem_batch = 10;
  ModelState model(small_model(), 8);
  MemoryBuffer mem(30, 9);
  er_train_step(model, mem, blob_batch(10, {1, 0}, rng), cfg);
  CHECK(model.head_classes() == std::vector<int>{0, 1});
  CHECK(model.step() == 1);

  MemoryBuffer twin(30, 9);
  twin.mutable_entries() = mem.entries();
  for (std::uint64_t i = 0; i < mem.seen(); ++i) twin.record_seen();
  twin.rng() = mem.rng();
  ModelState ref = model;
  const auto incoming = blob_batch(10, {2, 3}, rng);
  const float loss = er_train_step(model, mem, incoming, cfg);
  CHECK(model.head_classes() == std::vector<int>{0, 1, 2, 3});

  const int fresh[] = {2, 3};
  ref.expand_head(fresh);
  const Batch joint = concat(incoming, random_retrieve(twin, cfg.mem_batch));
  Graph<float> g;
  auto out = logits(g, ref, encode(g, ref, joint));
  std::vector<int> targets;
  for (int y : joint.labels()) targets.push_back(static_cast<int>(*ref.head_row(y)));
  auto l = cross_entropy(out, std::span<const int>(targets));
  g.backward(l);
  CHECK(loss == g.item(l));

  oracle::Matrix rows(joint.size(), std::vector<double>(4));
  for (std::size_t r = 0; r < joint.size(); ++r) {
    for (std::size_t c = 0; c < 4; ++c) rows[r][c] = g.value(out)[r * 4 + c];
  }
  CHECK(double(loss) == doctest::Approx(oracle::cross_entropy(rows, targets)).epsilon(1e-5));

  for (auto* p : ref.encoder_params()) {
    for (std::size_t i = 0; i < p->size(); ++i) p->values()[i] -= 0.1f * p->grad()[i];
  }
  for (auto* p : ref.head_params()) {
    for (std::size_t i = 0; i < p->size(); ++i) p->values()[i] -= 0.1f * p->grad()[i];
  }
  CHECK(param_values(model) == param_values(ref));
  reservoir_update(twin, incoming);
  CHECK(snapshot(mem) == snapshot(twin));
}

TEST_CASE("er with no memory is fine-tuning") {
  const auto data = gen_synthetic(4, 6, 30, 10, 4.0, 11);
  MethodConfig er;
  er.method = Method::er;
  er.mem_size = 0;
  er.seed = 3;
  MethodConfig ft = er;
  ft.method = Method::finetune;
  ft.mem_size = 100;
  // er with M=0 is rejected by nothing; finetune normalizes its memory away.
  const auto a = run_experiment(er, small_model(), AugmentorSpec{}, split_tasks(data.train, 1, 4, 5), data.test);
  const auto b = run_experiment(ft, small_model(), AugmentorSpec{}, split_tasks(data.train, 1, 4, 5), data.test);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.confusion == b.confusion);
  CHECK(a.fc_weight_means == b.fc_weight_means);
}

TEST_CASE("learner bookkeeping") {
  auto rng = make_rng(6, "test-learner");
  MethodConfig cfg;
  cfg.method = Method::er_ncm;
  cfg.mem_size = 25;
  Learner learner(cfg, small_model(), AugmentorSpec{});
  const auto probe = blob_batch(4, {0, 1}, rng);
  CHECK_THROWS_AS(learner.predict(probe), NoPrototypesError);
  for (int i = 0; i < 6; ++i) learner.observe(blob_batch(10, {0, 1}, rng));
  CHECK(learner.model().step() == 6);
  CHECK(learner.memory().size() == 25);
  CHECK(learner.predict(probe).size() == 4);
  CHECK_THROWS_AS(learner.observe(Batch(6)), EmptyBatchError);

  cfg.method = Method::scr;
  cfg.mem_size = 0;
  CHECK_THROWS_AS(Learner(cfg, small_model(), AugmentorSpec{}), ConfigError);
}

TEST_CASE("run_experiment fills the matrix at task boundaries") {
  const auto data = gen_synthetic(6, 6, 40, 10, 5.0, 12);
  MethodConfig cfg;
  cfg.method = Method::er;
  cfg.mem_size = 30;
  cfg.seed = 4;
  const auto r = run_experiment(cfg, small_model(), AugmentorSpec{}, split_tasks(data.train, 3, 2, 8), data.test);
  CHECK(r.accuracy.complete());
  CHECK(r.task_classes.size() == 3);
  double sum = 0.0;
  for (std::size_t j = 0; j < 3; ++j) sum += r.accuracy.at(2, j);
  CHECK(average_accuracy(r.accuracy) == sum / 3.0);
  for (std::size_t t = 0; t < 6; ++t) CHECK(r.confusion.row_total(t) == 10);
  CHECK(r.fc_weight_means.size() == 6);
  CHECK(r.seed == 4);

  const auto again = run_experiment(cfg, small_model(), AugmentorSpec{}, split_tasks(data.train, 3, 2, 8), data.test);
  CHECK(again.accuracy == r.accuracy);
  CHECK(again.confusion == r.confusion);
}

TEST_CASE("scr and er see the same stream") {
  const auto data = gen_synthetic(4, 6, 20, 5, 5.0, 13);
  MethodConfig a;
  a.method = Method::scr;
  a.mem_size = 20;
  MethodConfig b = a;
  b.method = Method::er;
  const auto ra = run_experiment(a, small_model(), AugmentorSpec{}, split_tasks(data.train, 2, 2, 3), data.test);
  const auto rb = run_experiment(b, small_model(), AugmentorSpec{}, split_tasks(data.train, 2, 2, 3), data.test);
  CHECK(ra.task_classes == rb.task_classes);
  CHECK(ra.fc_weight_means.empty());
}

TEST_CASE("offline training on well separated blobs") {
  const auto data = gen_synthetic(4, 6, 50, 25, 100.0, 14);
  MethodConfig cfg;
  cfg.method = Method::offline;
  cfg.offline_epochs = 50;
  cfg.seed = 2;
  const auto r = run_experiment(cfg, small_model(), AugmentorSpec{}, split_tasks(data.train, 2, 2, 1), data.test);
  CHECK(r.accuracy.tasks() == 1);
  CHECK(average_accuracy(r.accuracy) > 0.99);
  CHECK(r.method.mem_size == 0);
}

TEST_CASE("offline epochs are reshuffled") {
  // Two epochs over a reshuffled order differ from two passes over one fixed
  // order; the final weights show it.
  const auto data = gen_synthetic(2, 6, 20, 5, 3.0, 15);
  MethodConfig cfg;
  cfg.method = Method::offline;
  cfg.offline_epochs = 2;
  auto run = run_experiment_full(cfg, small_model(), AugmentorSpec{}, split_tasks(data.train, 1, 2, 1), data.test);

  ModelState fixed(small_model(), cfg.seed);
  const int cls[] = {0, 1};
  fixed.expand_head(cls);
  auto rng = make_rng(cfg.seed, "offline-epochs");
  std::vector<std::size_t> order(40);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, 0, i - 1)]);
  const auto& all = split_tasks(data.train, 1, 2, 1).task(0).data;
  for (int epoch = 0; epoch < 2; ++epoch) {
    for (std::size_t off = 0; off < 40; off += 10) {
      supervised_step(fixed, all.select(std::span<const std::size_t>(order.data() + off, 10)), cfg);
    }
  }
  CHECK(param_values(run.learner->model()) != param_values(fixed));
}
