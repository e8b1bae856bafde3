#include "screplay/metrics.hpp"

#include "screplay/error.hpp"

#include <algorithm>
#include <string>

namespace screplay {

AccuracyMatrix::AccuracyMatrix(std::size_t tasks) : tasks_(tasks), cells_(tasks * tasks) {}

void AccuracyMatrix::set(std::size_t i, std::size_t j, double acc) {
  if (i >= tasks_ || j > i) {
    throw ContractError("accuracy entry (" + std::to_string(i) + "," + std::to_string(j) +
                        ") outside the lower triangle of " + std::to_string(tasks_) + " tasks");
  }
  if (!(acc >= 0.0 && acc <= 1.0)) {
    throw ContractError("accuracy " + std::to_string(acc) + " outside [0, 1]");
  }
  cells_[i * tasks_ + j] = acc;
}

std::optional<double> AccuracyMatrix::get(std::size_t i, std::size_t j) const {
  if (i >= tasks_ || j > i) return std::nullopt;
  return cells_[i * tasks_ + j];
}

double AccuracyMatrix::at(std::size_t i, std::size_t j) const {
  auto v = get(i, j);
  if (!v) throw StateError("accuracy entry (" + std::to_string(i) + "," + std::to_string(j) + ") not recorded");
  return *v;
}

bool AccuracyMatrix::row_complete(std::size_t i) const {
  if (i >= tasks_) return false;
  for (std::size_t j = 0; j <= i; ++j) {
    if (!cells_[i * tasks_ + j]) return false;
  }
  return true;
}

bool AccuracyMatrix::complete() const {
  for (std::size_t i = 0; i < tasks_; ++i) {
    if (!row_complete(i)) return false;
  }
  return tasks_ > 0;
}

double average_accuracy(const AccuracyMatrix& m) {
  if (m.tasks() == 0 || !m.row_complete(m.tasks() - 1)) {
    throw StateError("average accuracy needs a complete final row");
  }
  const std::size_t last = m.tasks() - 1;
  double total = 0.0;
  for (std::size_t j = 0; j <= last; ++j) total += m.at(last, j);
  return total / static_cast<double>(m.tasks());
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes; ++p) n += at(truth, p);
  return n;
}

std::size_t ConfusionMatrix::column_total(std::size_t pred) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < classes; ++t) n += at(t, pred);
  return n;
}

std::size_t ConfusionMatrix::most_predicted() const {
  std::size_t best = 0;
  for (std::size_t p = 1; p < classes; ++p) {
    if (column_total(p) > column_total(best)) best = p;
  }
  return best;
}

ConfusionMatrix confusion_matrix(std::span<const int> preds, std::span<const int> truths,
                                 std::size_t classes) {
  if (preds.size() != truths.size()) {
    throw ContractError("confusion matrix needs equally many predictions and truths");
  }
  ConfusionMatrix cm{classes, std::vector<std::size_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], t = truths[i];
    if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= classes ||
        static_cast<std::size_t>(t) >= classes) {
      throw ContractError("label outside [0, " + std::to_string(classes) + ") in confusion matrix");
    }
    ++cm.counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
  }
  return cm;
}

std::vector<ClassWeightMean> fc_class_means(const ModelState& model,
                                            const std::map<int, std::size_t>& task_of_class) {
  std::vector<ClassWeightMean> out;
  if (!model.has_head()) return out;
  const auto& w = model.head().weight;
  const std::size_t cols = w.cols();
  const auto& classes = model.head_classes();
  for (std::size_t r = 0; r < classes.size(); ++r) {
    auto it = task_of_class.find(classes[r]);
    if (it == task_of_class.end()) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += w.at(r, c);
    out.push_back({classes[r], it->second, s / static_cast<double>(cols)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  return out;
}

FcBiasReport fc_bias_diagnostic(std::span<const ClassWeightMean> class_means, std::size_t tasks) {
  FcBiasReport report;
  if (class_means.empty()) return report;
  report.applicable = true;
  std::vector<double> sums(tasks, 0.0);
  std::vector<std::size_t> counts(tasks, 0);
  for (const auto& cm : class_means) {
    if (cm.task >= tasks) continue;
    sums[cm.task] += cm.mean;
    ++counts[cm.task];
  }
  report.task_means.assign(tasks, std::nullopt);
  for (std::size_t t = 0; t < tasks; ++t) {
    if (counts[t]) report.task_means[t] = sums[t] / static_cast<double>(counts[t]);
  }
  std::optional<std::size_t> last;
  for (std::size_t t = tasks; t-- > 0;) {
    if (report.task_means[t]) {
      last = t;
      break;
    }
  }
  if (!last || *last == 0) return report;
  bool above_all = true;
  bool any_earlier = false;
  for (std::size_t t = 0; t < *last; ++t) {
    if (!report.task_means[t]) continue;
    any_earlier = true;
    if (!(*report.task_means[*last] > *report.task_means[t])) above_all = false;
  }
  report.recency_bias = any_earlier && above_all;
  return report;
}

FcBiasReport fc_bias_diagnostic(const ModelState& model,
                                const std::map<int, std::size_t>& task_of_class) {
  if (!model.has_head()) return {};
  std::size_t tasks = 0;
  for (const auto& [_, t] : task_of_class) tasks = std::max(tasks, t + 1);
  return fc_bias_diagnostic(fc_class_means(model, task_of_class), tasks);
}

} // namespace screplay
