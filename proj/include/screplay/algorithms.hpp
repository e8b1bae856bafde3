#pragma once

#include "screplay/classifiers.hpp"
#include "screplay/memory.hpp"
#include "screplay/metrics.hpp"
#include "screplay/model.hpp"
#include "screplay/stream_data.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace screplay {

enum class Method { scr, er, er_ncm, finetune, offline };

std::string to_string(Method method);
Method parse_method(const std::string& text);

/// How the contrastive training step scales the anchor-summed loss.
/// `mean` divides by the number of anchors before the SGD step.
enum class SclReduction { sum, mean };

std::string to_string(SclReduction reduction);
SclReduction parse_scl_reduction(const std::string& text);

struct MethodConfig {
  Method method = Method::scr;
  double lr = 0.1;
  std::size_t stream_batch = 10;
  std::size_t mem_batch = 100;
  std::size_t mem_size = 100;
  double tau = 0.1;
  std::size_t offline_epochs = 50;
  SclReduction scl_reduction = SclReduction::mean;
  std::uint64_t seed = 0;

  /// Copy with method-implied settings applied (finetune and offline keep no memory).
  MethodConfig normalized() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  /// NCM-evaluated methods.
  bool uses_ncm() const noexcept { return method == Method::scr || method == Method::er_ncm; }

  bool operator==(const MethodConfig&) const = default;
};

/// One SCR update: replay, multiview construction, contrastive SGD step on
/// encoder and projection, then memory update with the incoming batch only.
/// Returns the loss value.
float scr_train_step(ModelState& model, MemoryBuffer& memory, const Batch& incoming,
                     const MethodConfig& cfg, Augmentor& augmentor);

/// One replay update with cross-entropy on the softmax head. Unseen labels of
/// `incoming` are housed first; a replayed label without a head row throws
/// ContractError. With a zero-capacity memory this is plain fine-tuning.
float er_train_step(ModelState& model, MemoryBuffer& memory, const Batch& incoming,
                    const MethodConfig& cfg);

/// Cross-entropy step on a batch without memory (used by offline training).
float supervised_step(ModelState& model, const Batch& batch, const MethodConfig& cfg);

/// Stateful learner for one method: owns the model, memory and augmentor.
class Learner {
public:
  Learner(const MethodConfig& cfg, const ModelConfig& model_cfg, const AugmentorSpec& aug);

  /// One training step on a stream batch.
  float observe(const Batch& incoming);
  /// Predictions with the method's classifier (NCM over the buffer or softmax).
  std::vector<int> predict(const Batch& xs) const;

  const MethodConfig& config() const noexcept { return cfg_; }
  ModelState& model() noexcept { return model_; }
  const ModelState& model() const noexcept { return model_; }
  MemoryBuffer& memory() noexcept { return memory_; }
  const MemoryBuffer& memory() const noexcept { return memory_; }

private:
  MethodConfig cfg_;
  ModelState model_;
  MemoryBuffer memory_;
  Augmentor augmentor_;
};

struct RunResult {
  MethodConfig method;
  std::vector<std::vector<int>> task_classes;
  AccuracyMatrix accuracy;
  ConfusionMatrix confusion;
  std::vector<ClassWeightMean> fc_weight_means;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const RunResult&) const = default;
};

struct RunOptions {
  /// Receives warnings such as classes excluded from NCM for lack of buffered samples.
  std::function<void(const std::string&)> warn;
};

/// A run together with the final learner, for checkpointing and dumps.
struct RunOutcome {
  RunResult result;
  std::optional<Learner> learner;
};

/// Consumes the stream once (offline: offline_epochs iid passes over the
/// union of all tasks, recorded as a single task) and fills the accuracy
/// matrix at each task boundary.
RunOutcome run_experiment_full(const MethodConfig& cfg, const ModelConfig& model_cfg,
                               const AugmentorSpec& aug, TaskStream stream, const Dataset& test,
                               const RunOptions& options = {});

RunResult run_experiment(const MethodConfig& cfg, const ModelConfig& model_cfg,
                         const AugmentorSpec& aug, TaskStream stream, const Dataset& test,
                         const RunOptions& options = {});

/// Fraction of rows of `xs` classified correctly.
double accuracy_of(std::span<const int> preds, std::span<const int> truths);

} // namespace screplay
