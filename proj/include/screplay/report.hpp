#pragma once

#include "screplay/results_io.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace screplay {

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> values);
double mean_of(std::span<const double> values);

struct ReportRow {
  std::string method;
  std::size_t mem_size = 0;
  std::size_t mem_batch = 0;
  double tau = 0.0;
  std::size_t runs = 0;
  double mean = 0.0;
  double sample_std = 0.0;
};

/// Groups runs by (method, mem_size, mem_batch, tau) and reports mean and
/// sample std of the average accuracy across seeds.
std::vector<ReportRow> aggregate(std::span<const SummaryRow> rows);
std::string format_report_tsv(std::span<const ReportRow> rows);

/// Run directories (those holding summary.csv) under the given paths, sorted.
std::vector<std::filesystem::path> find_run_dirs(std::span<const std::filesystem::path> roots);

/// Plot-ready curve: per group and trained task, mean over seeds of the mean
/// accuracy over observed tasks.
std::string format_curves_tsv(std::span<const std::filesystem::path> run_dirs);

} // namespace screplay
