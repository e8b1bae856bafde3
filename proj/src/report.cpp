#include "screplay/report.hpp"

#include "screplay/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace screplay {

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {
using GroupKey = std::tuple<std::string, std::size_t, std::size_t, double>;
}

std::vector<ReportRow> aggregate(std::span<const SummaryRow> rows) {
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& r : rows) {
    groups[{r.method, r.mem_size, r.mem_batch, r.tau}].push_back(r.average_accuracy);
  }
  std::vector<ReportRow> out;
  for (const auto& [key, values] : groups) {
    ReportRow row;
    std::tie(row.method, row.mem_size, row.mem_batch, row.tau) = key;
    row.runs = values.size();
    row.mean = mean_of(values);
    row.sample_std = sample_std(values);
    out.push_back(row);
  }
  return out;
}

std::string format_report_tsv(std::span<const ReportRow> rows) {
  std::string out = "method\tmem_size\tmem_batch\ttau\truns\tmean_accuracy\tsample_std\n";
  for (const auto& r : rows) {
    out += r.method + "\t" + std::to_string(r.mem_size) + "\t" + std::to_string(r.mem_batch) + "\t" +
           format_real(r.tau) + "\t" + std::to_string(r.runs) + "\t" + format_real(r.mean) + "\t" +
           format_real(r.sample_std) + "\n";
  }
  return out;
}

std::vector<std::filesystem::path> find_run_dirs(std::span<const std::filesystem::path> roots) {
  std::set<std::filesystem::path> dirs;
  for (const auto& root : roots) {
    if (!std::filesystem::exists(root)) throw FormatError("no such path: " + root.string());
    if (std::filesystem::is_regular_file(root)) {
      if (root.filename() == kSummaryFile) dirs.insert(root.parent_path());
      continue;
    }
    if (std::filesystem::exists(root / kSummaryFile)) dirs.insert(root);
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == kSummaryFile) {
        dirs.insert(entry.path().parent_path());
      }
    }
  }
  return {dirs.begin(), dirs.end()};
}

std::string format_curves_tsv(std::span<const std::filesystem::path> run_dirs) {
  // group -> trained task -> per-seed mean accuracy over observed tasks
  std::map<GroupKey, std::map<std::size_t, std::vector<double>>> curves;
  for (const auto& dir : run_dirs) {
    const auto run = read_run(dir);
    const auto& m = run.result.accuracy;
    const auto& cfg = run.result.method;
    GroupKey key{to_string(cfg.method), cfg.mem_size, cfg.mem_batch, cfg.tau};
    for (std::size_t i = 0; i < m.tasks(); ++i) {
      if (!m.row_complete(i)) continue;
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) s += m.at(i, j);
      curves[key][i + 1].push_back(s / static_cast<double>(i + 1));
    }
  }
  std::string out = "method\tmem_size\tmem_batch\ttau\ttask\truns\tmean_accuracy\tsample_std\n";
  for (const auto& [key, per_task] : curves) {
    for (const auto& [task, values] : per_task) {
      out += std::get<0>(key) + "\t" + std::to_string(std::get<1>(key)) + "\t" +
             std::to_string(std::get<2>(key)) + "\t" + format_real(std::get<3>(key)) + "\t" +
             std::to_string(task) + "\t" + std::to_string(values.size()) + "\t" +
             format_real(mean_of(values)) + "\t" + format_real(sample_std(values)) + "\n";
    }
  }
  return out;
}

} // namespace screplay
