#pragma once

#include "screplay/model.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace screplay {

/// Lower-triangular record of a[i][j]: accuracy on task j's test set after
/// training through task i (both 0-based here).
class AccuracyMatrix {
public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t tasks);

  std::size_t tasks() const noexcept { return tasks_; }
  /// Throws ContractError when j > i, indices are out of range, or acc is outside [0, 1].
  void set(std::size_t i, std::size_t j, double acc);
  std::optional<double> get(std::size_t i, std::size_t j) const;
  /// Throws StateError if the entry was never filled.
  double at(std::size_t i, std::size_t j) const;
  bool row_complete(std::size_t i) const;
  bool complete() const;

  bool operator==(const AccuracyMatrix&) const = default;

private:
  std::size_t tasks_ = 0;
  std::vector<std::optional<double>> cells_;
};

/// Mean of the final row. Throws StateError if that row is incomplete.
double average_accuracy(const AccuracyMatrix& m);

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts; // row = true class, column = predicted class

  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }
  std::size_t row_total(std::size_t truth) const;
  std::size_t column_total(std::size_t pred) const;
  /// Predicted class with the largest column total (lowest label on ties).
  std::size_t most_predicted() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Tallies (truth, prediction) pairs. Throws ContractError on length or range violations.
ConfusionMatrix confusion_matrix(std::span<const int> preds, std::span<const int> truths,
                                 std::size_t classes);

struct ClassWeightMean {
  int label = 0;
  std::size_t task = 0;
  double mean = 0.0;

  bool operator==(const ClassWeightMean&) const = default;
};

/// Mean of each housed class's head weight row, tagged with its task.
std::vector<ClassWeightMean> fc_class_means(const ModelState& model,
                                            const std::map<int, std::size_t>& task_of_class);

struct FcBiasReport {
  bool applicable = false;
  /// Per task: mean over its housed classes of the class weight-row means.
  std::vector<std::optional<double>> task_means;
  /// Final task's mean strictly above every earlier task's.
  bool recency_bias = false;
};

/// Recency-bias diagnostic over the softmax head. A model without a head
/// yields applicable = false rather than an error.
FcBiasReport fc_bias_diagnostic(const ModelState& model,
                                const std::map<int, std::size_t>& task_of_class);
FcBiasReport fc_bias_diagnostic(std::span<const ClassWeightMean> class_means, std::size_t tasks);

} // namespace screplay
