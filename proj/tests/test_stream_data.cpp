#include "screplay/error.hpp"
#include "screplay/stream_data.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace screplay;

namespace {

Dataset labeled_dataset(std::size_t classes, std::size_t per_class) {
  Dataset ds;
  ds.class_count = classes;
  ds.examples = Batch(2);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      ds.examples.push_back(std::vector<float>{static_cast<float>(c), static_cast<float>(i)}, static_cast<int>(c));
    }
  }
  return ds;
}

std::vector<std::pair<float, float>> drain(TaskStream& s, std::vector<std::size_t>* sizes = nullptr) {
  std::vector<std::pair<float, float>> out;
  while (auto b = s.next_batch()) {
    if (sizes) sizes->push_back(b->batch.size());
    for (std::size_t i = 0; i < b->batch.size(); ++i) out.emplace_back(b->batch.row(i)[0], b->batch.row(i)[1]);
  }
  return out;
}

} // namespace

TEST_CASE("split_tasks partitions classes") {
  const auto ds = labeled_dataset(10, 30);
  auto s = split_tasks(ds, 5, 2, 7);
  REQUIRE(s.num_tasks() == 5);
  std::set<int> all;
  for (const auto& t : s.tasks()) {
    CHECK(t.classes.size() == 2);
    CHECK(std::is_sorted(t.classes.begin(), t.classes.end()));
    for (int c : t.classes) CHECK(all.insert(c).second);
    CHECK(t.data.size() == 60);
    for (int y : t.data.labels()) CHECK(std::count(t.classes.begin(), t.classes.end(), y) == 1);
  }
  CHECK(all.size() == 10);
  const auto toc = s.task_of_class();
  CHECK(toc.size() == 10);
  CHECK(s.total_examples() == 300);
  CHECK(s.dim() == 2);

  CHECK_THROWS_AS(split_tasks(ds, 3, 2, 7), ConfigError);
}

TEST_CASE("single task holds every class") {
  const auto ds = labeled_dataset(4, 5);
  auto s = split_tasks(ds, 1, 4, 3);
  CHECK(s.num_tasks() == 1);
  CHECK(s.task(0).classes == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("split_tasks is deterministic") {
  const auto ds = labeled_dataset(10, 12);
  auto a = split_tasks(ds, 5, 2, 11);
  auto b = split_tasks(ds, 5, 2, 11);
  auto c = split_tasks(ds, 5, 2, 12);
  for (std::size_t t = 0; t < 5; ++t) CHECK(a.task(t).classes == b.task(t).classes);
  CHECK(drain(a) == drain(b));
  CHECK(drain(c) != drain(b));
}

TEST_CASE("stream emits each example once, with a short final batch") {
  Dataset ds = labeled_dataset(2, 25);
  Task t{{0}, filter_classes(ds.examples, std::vector<int>{0})};
  TaskStream single({t}, 10);
  std::vector<std::size_t> sizes;
  const auto got = drain(single, &sizes);
  CHECK(sizes == std::vector<std::size_t>{10, 10, 5});
  CHECK(got.size() == 25);
  for (std::size_t i = 0; i < 25; ++i) CHECK(got[i] == std::pair<float, float>{0.f, static_cast<float>(i)});
  CHECK_FALSE(single.next_batch().has_value());
  single.rewind();
  CHECK(single.next_batch().has_value());

  auto s = split_tasks(labeled_dataset(6, 17), 3, 2, 5);
  std::vector<std::pair<float, float>> expect;
  for (const auto& task : s.tasks()) {
    for (std::size_t i = 0; i < task.data.size(); ++i) expect.emplace_back(task.data.row(i)[0], task.data.row(i)[1]);
  }
  const auto all = drain(s);
  CHECK(all == expect);
  auto sorted = all;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(all.size() == 6 * 17);
}

TEST_CASE("batches never mix tasks") {
  auto s = split_tasks(labeled_dataset(4, 13), 2, 2, 9);
  while (auto b = s.next_batch()) {
    const auto& cls = s.task(b->task).classes;
    for (int y : b->batch.labels()) CHECK(std::count(cls.begin(), cls.end(), y) == 1);
  }
}

TEST_CASE("augmentation") {
  Batch b(4);
  b.push_back(std::vector<float>{1, 2, 3, 4}, 3);
  b.push_back(std::vector<float>{-1, 0, 1, 0}, 1);

  SUBCASE("zero noise is the identity") {
    Augmentor aug(AugmentorSpec{AugmentMode::vector_noise, 0.0, 4, {}}, 1);
    CHECK(aug(b) == b);
  }
  SUBCASE("labels preserved and seeded") {
    Augmentor a1(AugmentorSpec{}, 5), a2(AugmentorSpec{}, 5);
    const auto x = a1(b);
    CHECK(x.labels() == b.labels());
    CHECK(x == a2(b));
    CHECK_FALSE(x == b);
  }
  SUBCASE("noise standard deviation") {
    Augmentor aug(AugmentorSpec{}, 9);
    Batch one(3);
    one.push_back(std::vector<float>{0.5f, -0.5f, 2.f}, 0);
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
      const auto v = aug(one);
      for (std::size_t k = 0; k < 3; ++k) {
        const double d = v.row(0)[k] - one.row(0)[k];
        sum[k] += d;
        sq[k] += d * d;
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const double mean = sum[k] / n;
      const double sd = std::sqrt((sq[k] - n * mean * mean) / (n - 1));
      CHECK(sd >= 0.04);
      CHECK(sd <= 0.06);
    }
  }
  SUBCASE("image flip and crop keeps shape, labels and pixel values") {
    AugmentorSpec spec{AugmentMode::image_flip_crop, 0.0, 1, ImageShape{1, 2, 2}};
    Augmentor aug(spec, 3);
    const auto out = aug(b);
    CHECK(out.size() == 2);
    CHECK(out.dim() == 4);
    CHECK(out.labels() == b.labels());
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (float v : out.row(i)) {
        const auto r = b.row(i);
        CHECK((v == 0.f || std::find(r.begin(), r.end(), v) != r.end()));
      }
    }
    AugmentorSpec bad = spec;
    bad.image = ImageShape{1, 3, 3};
    Augmentor wrong(bad, 3);
    CHECK_THROWS_AS(wrong(b), ConfigError);
  }
  SUBCASE("image crop without padding and flip shows only mirrored or original rows") {
    AugmentorSpec spec{AugmentMode::image_flip_crop, 0.0, 0, ImageShape{1, 1, 4}};
    Augmentor aug(spec, 12);
    int flipped = 0;
    for (int t = 0; t < 200; ++t) {
      const auto out = aug(b);
      const auto r = out.row(0);
      const bool same = std::equal(r.begin(), r.end(), b.row(0).begin());
      const bool mirror = std::equal(r.begin(), r.end(), b.row(0).rbegin());
      CHECK((same || mirror));
      flipped += mirror;
    }
    CHECK(flipped > 60);
    CHECK(flipped < 140);
  }
  CHECK(parse_augment_mode(to_string(AugmentMode::image_flip_crop)) == AugmentMode::image_flip_crop);
}

TEST_CASE("synthetic blobs") {
  const auto a = gen_synthetic(4, 6, 20, 5, 5.0, 3);
  const auto b = gen_synthetic(4, 6, 20, 5, 5.0, 3);
  CHECK(a.train.examples == b.train.examples);
  CHECK(a.test.examples == b.test.examples);
  CHECK(a.train.size() == 80);
  CHECK(a.test.size() == 20);
  CHECK(a.train.split == Split::train);
  CHECK(a.test.split == Split::test);
  CHECK(a.train.examples.label(0) == 0);
  CHECK(a.train.examples.label(79) == 3);
  CHECK_NOTHROW(a.train.validate());

  // With zero separation every class shares the same center: class means agree
  // up to sampling noise.
  const auto z = gen_synthetic(2, 3, 2000, 1, 0.0, 4);
  for (std::size_t k = 0; k < 3; ++k) {
    double m0 = 0, m1 = 0;
    for (std::size_t i = 0; i < 2000; ++i) m0 += z.train.examples.row(i)[k];
    for (std::size_t i = 2000; i < 4000; ++i) m1 += z.train.examples.row(i)[k];
    CHECK(std::abs(m0 / 2000 - m1 / 2000) < 0.15);
  }
}

TEST_CASE("dataset validation") {
  Dataset ds = labeled_dataset(3, 2);
  ds.class_count = 2;
  CHECK_THROWS_AS(ds.validate(), ConfigError);
}

TEST_CASE("CLDS1 round trip and layout") {
  const auto ds = labeled_dataset(3, 4);
  std::stringstream ss;
  write_clds(ss, ds.examples, 3);
  const auto bytes = ss.str();
  CHECK(bytes.size() == 5 + 12 + 12 * 2 * 4 + 12 * 4);
  CHECK(bytes.substr(0, 5) == "CLDS1");
  // u32 count, little-endian.
  CHECK(static_cast<unsigned char>(bytes[5]) == 12);
  CHECK(bytes[6] == 0);
  std::istringstream is(bytes);
  const auto back = read_clds(is);
  CHECK(back.examples == ds.examples);
  CHECK(back.class_count == 3);

  std::istringstream bad("CLDS2xxxxxxxxxxxx");
  CHECK_THROWS_AS(read_clds(bad), FormatError);
  std::istringstream cut(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_clds(cut), FormatError);
}
