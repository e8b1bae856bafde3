#pragma once

#include "screplay/algorithms.hpp"
#include "screplay/experiment_config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace screplay {

/// On-disk layout of one run directory. Every file except timing.csv is a
/// pure function of the config and seed.
inline constexpr const char* kConfigFile = "config.cfg";
inline constexpr const char* kResultsFile = "results.csv";
inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kTasksFile = "tasks.csv";
inline constexpr const char* kConfusionFile = "confusion.csv";
inline constexpr const char* kFcWeightsFile = "fc_weights.csv";
inline constexpr const char* kTimingFile = "timing.csv";

struct StoredRun {
  ExperimentConfig config;
  RunResult result;
};

void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& result);
StoredRun read_run(const std::filesystem::path& dir);

/// results.csv body: one row per recorded a[i][j] with 1-based task indices.
std::string format_results_csv(const RunResult& result);

struct SummaryRow {
  std::uint64_t seed = 0;
  std::string method;
  std::size_t mem_size = 0;
  std::size_t mem_batch = 0;
  double tau = 0.0;
  std::size_t tasks = 0;
  double average_accuracy = 0.0;
};

std::vector<SummaryRow> read_summary(const std::filesystem::path& file);

} // namespace screplay
