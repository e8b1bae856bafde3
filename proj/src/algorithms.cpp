#include "screplay/algorithms.hpp"

#include "screplay/error.hpp"
#include "screplay/losses.hpp"
#include "screplay/optim.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

namespace screplay {

std::string to_string(Method method) {
  switch (method) {
    case Method::scr: return "scr";
    case Method::er: return "er";
    case Method::er_ncm: return "er_ncm";
    case Method::finetune: return "finetune";
    case Method::offline: return "offline";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "scr") return Method::scr;
  if (text == "er") return Method::er;
  if (text == "er_ncm") return Method::er_ncm;
  if (text == "finetune") return Method::finetune;
  if (text == "offline") return Method::offline;
  throw ConfigError("unknown method '" + text + "'");
}

std::string to_string(SclReduction reduction) { return reduction == SclReduction::sum ? "sum" : "mean"; }

SclReduction parse_scl_reduction(const std::string& text) {
  if (text == "sum") return SclReduction::sum;
  if (text == "mean") return SclReduction::mean;
  throw ConfigError("scl_reduction: expected sum or mean, got '" + text + "'");
}

MethodConfig MethodConfig::normalized() const {
  MethodConfig out = *this;
  if (method == Method::finetune || method == Method::offline) out.mem_size = 0;
  return out;
}

void MethodConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
  if (stream_batch == 0) throw ConfigError("stream_batch must be positive");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (method == Method::offline && offline_epochs == 0) {
    throw ConfigError("offline training needs at least one epoch");
  }
  if (uses_ncm() && normalized().mem_size == 0) {
    throw ConfigError(to_string(method) + " classifies from the buffer and needs mem_size > 0");
  }
}

namespace {

std::vector<Tensor<float>*> join(std::vector<Tensor<float>*> a, const std::vector<Tensor<float>*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void house_new_labels(ModelState& model, const Batch& batch) {
  std::set<int> unseen;
  for (int y : batch.labels()) {
    if (!model.head_row(y)) unseen.insert(y);
  }
  if (unseen.empty()) return;
  const std::vector<int> classes(unseen.begin(), unseen.end());
  model.expand_head(classes);
}

std::vector<int> head_targets(const ModelState& model, const Batch& batch) {
  std::vector<int> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto row = model.head_row(batch.label(i));
    if (!row) {
      throw ContractError("label " + std::to_string(batch.label(i)) + " has no head row");
    }
    targets[i] = static_cast<int>(*row);
  }
  return targets;
}

float cross_entropy_step(ModelState& model, const Batch& batch, const MethodConfig& cfg) {
  const auto targets = head_targets(model, batch);
  Graph<float> g;
  auto r = encode(g, model, batch);
  auto z = logits(g, model, r);
  auto loss = cross_entropy(z, std::span<const int>(targets));
  g.backward(loss);
  const auto params = join(model.encoder_params(), model.head_params());
  sgd_step<float>(params, static_cast<float>(cfg.lr));
  model.advance_step();
  return g.item(loss);
}

} // namespace

float scr_train_step(ModelState& model, MemoryBuffer& memory, const Batch& incoming,
                     const MethodConfig& cfg, Augmentor& augmentor) {
  if (incoming.empty()) throw EmptyBatchError("scr_train_step on an empty batch");
  const Batch replay = memory.retrieve(incoming, cfg.mem_batch);
  const Batch joint = concat(incoming, replay);
  const Batch views = concat(joint, augmentor(joint));

  Graph<float> g;
  auto r = encode(g, model, views);
  auto z = project(g, model, r);
  auto mv = MultiviewBatch<float>::paired(z, joint.labels());
  auto loss = scl_loss(mv, Temperature(cfg.tau));
  if (cfg.scl_reduction == SclReduction::mean) {
    loss = scale(loss, 1.0f / static_cast<float>(views.size()));
  }
  g.backward(loss);
  const auto params = join(model.encoder_params(), model.projection_params());
  sgd_step<float>(params, static_cast<float>(cfg.lr));
  model.advance_step();

  memory.update(incoming);
  return g.item(loss);
}

float er_train_step(ModelState& model, MemoryBuffer& memory, const Batch& incoming,
                    const MethodConfig& cfg) {
  if (incoming.empty()) throw EmptyBatchError("er_train_step on an empty batch");
  house_new_labels(model, incoming);
  const Batch replay = memory.retrieve(incoming, cfg.mem_batch);
  const float loss = cross_entropy_step(model, concat(incoming, replay), cfg);
  memory.update(incoming);
  return loss;
}

float supervised_step(ModelState& model, const Batch& batch, const MethodConfig& cfg) {
  if (batch.empty()) throw EmptyBatchError("supervised_step on an empty batch");
  house_new_labels(model, batch);
  return cross_entropy_step(model, batch, cfg);
}

Learner::Learner(const MethodConfig& cfg, const ModelConfig& model_cfg, const AugmentorSpec& aug)
    : cfg_(cfg.normalized()),
      model_(model_cfg, cfg.seed),
      memory_(cfg_.mem_size, derive_seed(cfg.seed, "memory")),
      augmentor_(aug, derive_seed(cfg.seed, "augment")) {
  cfg_.validate();
}

float Learner::observe(const Batch& incoming) {
  switch (cfg_.method) {
    case Method::scr: return scr_train_step(model_, memory_, incoming, cfg_, augmentor_);
    case Method::er:
    case Method::er_ncm:
    case Method::finetune: return er_train_step(model_, memory_, incoming, cfg_);
    case Method::offline: return supervised_step(model_, incoming, cfg_);
  }
  return 0.0f;
}

std::vector<int> Learner::predict(const Batch& xs) const {
  if (cfg_.uses_ncm()) {
    const auto protos = compute_prototypes(model_, snapshot(memory_));
    return ncm_classify(protos, model_, xs);
  }
  return softmax_classify(model_, xs);
}

double accuracy_of(std::span<const int> preds, std::span<const int> truths) {
  if (preds.size() != truths.size()) throw ContractError("prediction/truth length mismatch");
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truths[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

namespace {

void check_compatible(const ModelConfig& model_cfg, const TaskStream& stream, const Dataset& test) {
  if (stream.num_tasks() == 0) throw ConfigError("stream has no tasks");
  if (stream.dim() != model_cfg.input_dim) {
    throw ConfigError("stream dim " + std::to_string(stream.dim()) + " does not match model input_dim " +
                      std::to_string(model_cfg.input_dim));
  }
  if (test.dim() != model_cfg.input_dim) {
    throw ConfigError("test set dim " + std::to_string(test.dim()) + " does not match model input_dim " +
                      std::to_string(model_cfg.input_dim));
  }
  for (const auto& t : stream.tasks()) {
    for (int c : t.classes) {
      if (c < 0 || static_cast<std::size_t>(c) >= test.class_count) {
        throw ConfigError("stream class " + std::to_string(c) + " unknown to the test set");
      }
    }
  }
}

// Rows i of the matrix: accuracy on every observed task's test split.
void evaluate_row(const Learner& learner, const std::vector<Batch>& task_tests, std::size_t row,
                  const std::vector<std::vector<int>>& task_classes, AccuracyMatrix& acc,
                  const RunOptions& options) {
  std::optional<PrototypeSet> protos;
  if (learner.config().uses_ncm()) {
    protos = compute_prototypes(learner.model(), snapshot(learner.memory()));
    if (options.warn) {
      for (std::size_t t = 0; t <= row; ++t) {
        for (int c : task_classes[t]) {
          if (!protos->means.count(c)) {
            options.warn("class " + std::to_string(c) +
                         " has no buffered samples and is excluded from NCM after task " +
                         std::to_string(row + 1));
          }
        }
      }
    }
  }
  for (std::size_t j = 0; j <= row; ++j) {
    const auto& xs = task_tests[j];
    if (xs.empty()) {
      acc.set(row, j, 0.0);
      continue;
    }
    const auto preds = protos ? ncm_classify(*protos, learner.model(), xs) : learner.predict(xs);
    acc.set(row, j, accuracy_of(preds, xs.labels()));
  }
}

TaskStream merge_tasks(const TaskStream& stream) {
  Task all;
  for (const auto& t : stream.tasks()) {
    all.classes.insert(all.classes.end(), t.classes.begin(), t.classes.end());
    all.data.append(t.data);
  }
  std::sort(all.classes.begin(), all.classes.end());
  std::vector<Task> one;
  one.push_back(std::move(all));
  return TaskStream(std::move(one), stream.batch_size());
}

} // namespace

RunOutcome run_experiment_full(const MethodConfig& cfg_in, const ModelConfig& model_cfg,
                               const AugmentorSpec& aug, TaskStream stream, const Dataset& test,
                               const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const MethodConfig cfg = cfg_in.normalized();
  cfg.validate();
  check_compatible(model_cfg, stream, test);
  if (cfg.method == Method::offline) stream = merge_tasks(stream);

  RunOutcome outcome;
  auto& result = outcome.result;
  result.method = cfg;
  result.seed = cfg.seed;
  for (const auto& t : stream.tasks()) result.task_classes.push_back(t.classes);
  const std::size_t n_tasks = stream.num_tasks();
  result.accuracy = AccuracyMatrix(n_tasks);

  std::vector<Batch> task_tests;
  for (const auto& classes : result.task_classes) {
    task_tests.push_back(filter_classes(test.examples, classes));
  }

  outcome.learner.emplace(cfg, model_cfg, aug);
  Learner& learner = *outcome.learner;

  if (cfg.method == Method::offline) {
    const Batch& data = stream.task(0).data;
    // House every class up front so the head layout does not depend on batch order.
    learner.model().expand_head(stream.task(0).classes);
    auto rng = make_rng(cfg.seed, "offline-epochs");
    std::vector<std::size_t> order(data.size());
    for (std::size_t epoch = 0; epoch < cfg.offline_epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, 0, i - 1)]);
      }
      for (std::size_t off = 0; off < order.size(); off += cfg.stream_batch) {
        const std::size_t end = std::min(off + cfg.stream_batch, order.size());
        const Batch batch = data.select(std::span<const std::size_t>(order.data() + off, end - off));
        learner.observe(batch);
      }
    }
    evaluate_row(learner, task_tests, 0, result.task_classes, result.accuracy, options);
  } else {
    // Rows are filled when the stream moves past a task; tasks without data
    // are evaluated together with the next boundary.
    std::size_t next_row = 0;
    while (auto next = stream.next_batch()) {
      for (; next_row < next->task; ++next_row) {
        evaluate_row(learner, task_tests, next_row, result.task_classes, result.accuracy, options);
      }
      learner.observe(next->batch);
    }
    for (; next_row < n_tasks; ++next_row) {
      evaluate_row(learner, task_tests, next_row, result.task_classes, result.accuracy, options);
    }
  }

  std::vector<int> all_classes;
  for (const auto& c : result.task_classes) all_classes.insert(all_classes.end(), c.begin(), c.end());
  const Batch final_test = filter_classes(test.examples, all_classes);
  const auto preds = final_test.empty() ? std::vector<int>{} : learner.predict(final_test);
  result.confusion = confusion_matrix(preds, final_test.labels(), test.class_count);

  result.fc_weight_means = fc_class_means(learner.model(), stream.task_of_class());
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

RunResult run_experiment(const MethodConfig& cfg, const ModelConfig& model_cfg,
                         const AugmentorSpec& aug, TaskStream stream, const Dataset& test,
                         const RunOptions& options) {
  return run_experiment_full(cfg, model_cfg, aug, std::move(stream), test, options).result;
}

} // namespace screplay
