#pragma once

#include "screplay/algorithms.hpp"
#include "screplay/model.hpp"
#include "screplay/stream_data.hpp"

#include <filesystem>
#include <string>

namespace screplay {

enum class DataSource { synthetic, file };

struct DataConfig {
  DataSource source = DataSource::synthetic;
  std::size_t classes = 10;
  std::size_t per_class_train = 500;
  std::size_t per_class_test = 100;
  double separation = 5.0;
  std::string train_file;
  std::string test_file;
  std::size_t n_tasks = 5;
  std::size_t classes_per_task = 2;

  bool operator==(const DataConfig&) const = default;
};

/// Everything needed to reproduce one run. For synthetic data the model's
/// input_dim doubles as the generated dimension.
struct ExperimentConfig {
  MethodConfig method;
  ModelConfig model;
  DataConfig data;
  AugmentorSpec augment;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses flat `key = value` text. Blank lines and lines starting with '#'
/// are ignored; unknown or repeated keys throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text listing every key; parse_config(write_config(c)) == c.
std::string write_config(const ExperimentConfig& cfg);

/// Shortest decimal text that reads back to the same double.
std::string format_real(double v);
double parse_real(const std::string& text, const std::string& what);
std::size_t parse_count(const std::string& text, const std::string& what);

struct PreparedData {
  Dataset train;
  Dataset test;
};

/// Generates or loads the train/test splits named by the config.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Seed used for the stream's class split and shuffles; shared by all methods.
std::uint64_t stream_seed(std::uint64_t master);

struct ExperimentRun {
  RunOutcome outcome;
  PreparedData data;
};

/// Prepares data, builds the stream and runs the configured method.
ExperimentRun run_configured(const ExperimentConfig& cfg, const RunOptions& options = {});

} // namespace screplay
