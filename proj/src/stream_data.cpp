#include "screplay/stream_data.hpp"

#include "screplay/binary_io.hpp"
#include "screplay/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace screplay {

void Dataset::validate() const {
  for (int y : examples.labels()) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw ConfigError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(class_count) + ")");
    }
  }
}

Batch filter_classes(const Batch& batch, std::span<const int> classes) {
  const std::set<int> keep(classes.begin(), classes.end());
  Batch out(batch.dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (keep.count(batch.label(i))) out.push_back(batch.row(i), batch.label(i));
  }
  return out;
}

TaskStream::TaskStream(std::vector<Task> tasks, std::size_t batch_size)
    : tasks_(std::move(tasks)), batch_size_(batch_size) {
  if (batch_size_ == 0) throw ConfigError("stream batch size must be positive");
  std::set<int> seen;
  for (const auto& t : tasks_) {
    for (int c : t.classes) {
      if (!seen.insert(c).second) {
        throw ConfigError("class " + std::to_string(c) + " appears in more than one task");
      }
    }
  }
}

std::size_t TaskStream::dim() const {
  for (const auto& t : tasks_) {
    if (t.data.dim()) return t.data.dim();
  }
  return 0;
}

std::size_t TaskStream::total_examples() const {
  std::size_t n = 0;
  for (const auto& t : tasks_) n += t.data.size();
  return n;
}

std::map<int, std::size_t> TaskStream::task_of_class() const {
  std::map<int, std::size_t> out;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    for (int c : tasks_[i].classes) out[c] = i;
  }
  return out;
}

std::optional<StreamBatch> TaskStream::next_batch() {
  while (task_ < tasks_.size() && offset_ >= tasks_[task_].data.size()) {
    ++task_;
    offset_ = 0;
  }
  if (task_ >= tasks_.size()) return std::nullopt;
  const auto& data = tasks_[task_].data;
  const std::size_t end = std::min(offset_ + batch_size_, data.size());
  std::vector<std::size_t> idx(end - offset_);
  std::iota(idx.begin(), idx.end(), offset_);
  StreamBatch out{task_, data.select(idx)};
  offset_ = end;
  return out;
}

namespace {

template <typename Vec>
void shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = uniform_index(rng, 0, i - 1);
    std::swap(v[i - 1], v[j]);
  }
}

} // namespace

TaskStream split_tasks(const Dataset& ds, std::size_t n_tasks, std::size_t classes_per_task,
                       std::uint64_t seed, std::size_t batch_size) {
  if (n_tasks == 0 || classes_per_task == 0 || n_tasks * classes_per_task != ds.class_count) {
    throw ConfigError(std::to_string(n_tasks) + " tasks x " + std::to_string(classes_per_task) +
                      " classes does not cover " + std::to_string(ds.class_count) + " classes");
  }
  std::vector<int> order(ds.class_count);
  std::iota(order.begin(), order.end(), 0);
  auto class_rng = make_rng(seed, "task-classes");
  shuffle(order, class_rng);

  std::vector<Task> tasks(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    auto& task = tasks[t];
    task.classes.assign(order.begin() + static_cast<std::ptrdiff_t>(t * classes_per_task),
                        order.begin() + static_cast<std::ptrdiff_t>((t + 1) * classes_per_task));
    std::sort(task.classes.begin(), task.classes.end());
    Batch members = filter_classes(ds.examples, task.classes);
    std::vector<std::size_t> idx(members.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = make_rng(seed, "task-shuffle-" + std::to_string(t));
    shuffle(idx, rng);
    task.data = members.select(idx);
  }
  return TaskStream(std::move(tasks), batch_size);
}

std::string to_string(AugmentMode mode) {
  return mode == AugmentMode::vector_noise ? "vector_noise" : "image_flip_crop";
}

AugmentMode parse_augment_mode(const std::string& text) {
  if (text == "vector_noise") return AugmentMode::vector_noise;
  if (text == "image_flip_crop") return AugmentMode::image_flip_crop;
  throw ConfigError("unknown augmentation '" + text + "'");
}

Augmentor::Augmentor(AugmentorSpec spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
  if (spec_.mode == AugmentMode::vector_noise && !(spec_.sigma >= 0.0)) {
    throw ConfigError("augmentation sigma must be non-negative");
  }
  if (spec_.mode == AugmentMode::image_flip_crop && spec_.image.size() == 0) {
    throw ConfigError("image_flip_crop needs a positive image shape");
  }
}

Batch Augmentor::operator()(const Batch& batch) {
  Batch out = batch;
  if (batch.empty()) return out;
  if (spec_.mode == AugmentMode::vector_noise) {
    if (spec_.sigma == 0.0) return out;
    for (auto& v : out.features()) v += static_cast<float>(spec_.sigma * standard_normal(rng_));
    return out;
  }

  const auto [channels, height, width] = spec_.image;
  if (batch.dim() != spec_.image.size()) {
    throw ConfigError("image_flip_crop shape " + std::to_string(channels) + "x" +
                      std::to_string(height) + "x" + std::to_string(width) +
                      " does not match input dim " + std::to_string(batch.dim()));
  }
  const std::size_t pad = spec_.pad;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto src = batch.row(i);
    auto dst = out.row(i);
    const bool flip = uniform_unit(rng_) < 0.5;
    // Offsets of the crop window inside the (h + 2 pad) x (w + 2 pad) canvas.
    const auto dy = static_cast<std::ptrdiff_t>(uniform_index(rng_, 0, 2 * pad)) -
                    static_cast<std::ptrdiff_t>(pad);
    const auto dx = static_cast<std::ptrdiff_t>(uniform_index(rng_, 0, 2 * pad)) -
                    static_cast<std::ptrdiff_t>(pad);
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
          const auto fx = static_cast<std::ptrdiff_t>(x) + dx;
          float v = 0.0f;
          if (sy >= 0 && sy < static_cast<std::ptrdiff_t>(height) && fx >= 0 &&
              fx < static_cast<std::ptrdiff_t>(width)) {
            const auto sx = flip ? static_cast<std::ptrdiff_t>(width) - 1 - fx : fx;
            v = src[(c * height + static_cast<std::size_t>(sy)) * width + static_cast<std::size_t>(sx)];
          }
          dst[(c * height + y) * width + x] = v;
        }
      }
    }
  }
  return out;
}

Batch augment(Augmentor& augmentor, const Batch& batch) {
  return augmentor(batch);
}

SyntheticSplits gen_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class_train,
                              std::size_t per_class_test, double separation, std::uint64_t seed) {
  if (classes < 2) throw ConfigError("synthetic data needs at least two classes");
  if (dim == 0) throw ConfigError("synthetic data needs a positive dimension");
  auto center_rng = make_rng(seed, "synthetic-centers");
  std::vector<double> centers(classes * dim);
  for (std::size_t c = 0; c < classes; ++c) {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double v = standard_normal(center_rng);
        centers[c * dim + k] = v;
        sq += v * v;
      }
    } while (sq == 0.0);
    const double norm = std::sqrt(sq);
    for (std::size_t k = 0; k < dim; ++k) centers[c * dim + k] *= separation / norm;
  }

  auto sample = [&](std::size_t per_class, Rng& rng, Split split) {
    Dataset ds;
    ds.class_count = classes;
    ds.split = split;
    ds.examples = Batch(dim);
    ds.examples.reserve(classes * per_class);
    std::vector<float> x(dim);
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
          x[k] = static_cast<float>(centers[c * dim + k] + standard_normal(rng));
        }
        ds.examples.push_back(x, static_cast<int>(c));
      }
    }
    return ds;
  };
  auto train_rng = make_rng(seed, "synthetic-train");
  auto test_rng = make_rng(seed, "synthetic-test");
  return {sample(per_class_train, train_rng, Split::train), sample(per_class_test, test_rng, Split::test)};
}

namespace {
constexpr const char* kDatasetMagic = "CLDS1";
}

void write_clds(std::ostream& os, const Batch& rows, std::size_t class_count) {
  os.write(kDatasetMagic, 5);
  binio::write_u32(os, static_cast<std::uint32_t>(rows.size()));
  binio::write_u32(os, static_cast<std::uint32_t>(rows.dim()));
  binio::write_u32(os, static_cast<std::uint32_t>(class_count));
  for (float v : rows.features()) binio::write_f32(os, v);
  for (int y : rows.labels()) binio::write_u32(os, static_cast<std::uint32_t>(y));
  if (!os) throw FormatError("failed writing CLDS1 data");
}

void write_clds(const std::filesystem::path& path, const Batch& rows, std::size_t class_count) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_clds(os, rows, class_count);
}

Dataset read_clds(std::istream& is, Split split) {
  binio::expect_magic(is, kDatasetMagic);
  const std::size_t count = binio::read_u32(is);
  const std::size_t dim = binio::read_u32(is);
  const std::size_t classes = binio::read_u32(is);
  std::vector<float> features(count * dim);
  for (auto& v : features) v = binio::read_f32(is);
  std::vector<int> labels(count);
  for (auto& y : labels) y = static_cast<int>(binio::read_u32(is));
  Dataset ds;
  ds.examples = Batch(dim, std::move(features), std::move(labels));
  ds.class_count = classes;
  ds.split = split;
  ds.validate();
  return ds;
}

Dataset read_clds(const std::filesystem::path& path, Split split) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_clds(is, split);
}

} // namespace screplay
