#pragma once

#include "screplay/batch.hpp"
#include "screplay/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace screplay {

enum class Split { train, test };

struct Dataset {
  Batch examples;
  std::size_t class_count = 0;
  Split split = Split::train;

  std::size_t size() const noexcept { return examples.size(); }
  std::size_t dim() const noexcept { return examples.dim(); }
  /// Throws ConfigError unless labels lie in [0, class_count).
  void validate() const;
};

/// Rows of `batch` whose label is in `classes`, preserving order.
Batch filter_classes(const Batch& batch, std::span<const int> classes);

struct Task {
  std::vector<int> classes; // ascending
  Batch data;               // shuffled once at construction
};

struct StreamBatch {
  std::size_t task = 0;
  Batch batch;
};

/// Single-pass, class-incremental stream over class-disjoint tasks.
class TaskStream {
public:
  TaskStream(std::vector<Task> tasks, std::size_t batch_size);

  std::size_t num_tasks() const noexcept { return tasks_.size(); }
  const Task& task(std::size_t i) const { return tasks_.at(i); }
  const std::vector<Task>& tasks() const noexcept { return tasks_; }
  std::size_t batch_size() const noexcept { return batch_size_; }
  std::size_t dim() const;
  std::size_t total_examples() const;
  std::map<int, std::size_t> task_of_class() const;

  /// Next batch of at most batch_size rows from the current task; a task's
  /// final batch may be short. Returns nullopt at end of stream.
  std::optional<StreamBatch> next_batch();
  void rewind() noexcept { task_ = 0; offset_ = 0; }

private:
  std::vector<Task> tasks_;
  std::size_t batch_size_;
  std::size_t task_ = 0;
  std::size_t offset_ = 0;
};

/// Partitions the classes of `ds` into `n_tasks` tasks by a seeded
/// permutation and shuffles each task's examples with a per-task seed.
TaskStream split_tasks(const Dataset& ds, std::size_t n_tasks, std::size_t classes_per_task,
                       std::uint64_t seed, std::size_t batch_size = 10);

enum class AugmentMode { vector_noise, image_flip_crop };

std::string to_string(AugmentMode mode);
AugmentMode parse_augment_mode(const std::string& text);

struct ImageShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

struct AugmentorSpec {
  AugmentMode mode = AugmentMode::vector_noise;
  double sigma = 0.05;
  std::size_t pad = 4;
  ImageShape image{};

  bool operator==(const AugmentorSpec&) const = default;
};

/// Seeded, label-preserving view generator.
class Augmentor {
public:
  Augmentor(AugmentorSpec spec, std::uint64_t seed);

  const AugmentorSpec& spec() const noexcept { return spec_; }
  Batch operator()(const Batch& batch);

private:
  AugmentorSpec spec_;
  Rng rng_;
};

/// vector_noise adds iid N(0, sigma^2) per coordinate; image_flip_crop flips
/// horizontally with probability 0.5, then takes a random crop of the
/// zero-padded image. Shapes and labels are preserved.
Batch augment(Augmentor& augmentor, const Batch& batch);

struct SyntheticSplits {
  Dataset train;
  Dataset test;
};

/// Gaussian blobs: class c is centered at a seeded random unit direction
/// scaled by `separation`; samples add unit-variance noise. Rows are class-major.
SyntheticSplits gen_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class_train,
                              std::size_t per_class_test, double separation, std::uint64_t seed);

/// CLDS1: "CLDS1", u32 count, u32 flat_dim, u32 class_count, count*flat_dim
/// f32 values, count u32 labels; all little-endian.
void write_clds(std::ostream& os, const Batch& rows, std::size_t class_count);
void write_clds(const std::filesystem::path& path, const Batch& rows, std::size_t class_count);
Dataset read_clds(std::istream& is, Split split = Split::train);
Dataset read_clds(const std::filesystem::path& path, Split split = Split::train);

} // namespace screplay
