#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dagsparse/binary_io.hpp"
#include "dagsparse/datasets.hpp"

using namespace dagsparse;

namespace {

ShapesOptions small(int level, std::uint64_t seed = 3) {
  ShapesOptions o;
  o.level = level;
  o.train_size = 40;
  o.test_size = 20;
  o.resolution = 16;
  o.num_classes = 4;
  o.seed = seed;
  return o;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dagsparse_test_" + name)).string();
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  for (int level : {1, 2, 3}) {
    CHECK(gen_shapes(small(level)) == gen_shapes(small(level)));
    CHECK_FALSE(gen_shapes(small(level, 3)).train == gen_shapes(small(level, 4)).train);
  }
}

TEST_CASE("classes are balanced and pixels lie in the unit interval") {
  for (int level : {1, 2, 3}) {
    const Dataset d = gen_shapes(small(level));
    CHECK(class_counts(d.train, 4) == std::vector<int>{10, 10, 10, 10});
    CHECK(class_counts(d.test, 4) == std::vector<int>{5, 5, 5, 5});
    CHECK(d.train.images.rows() == 16 * 16);
    CHECK(d.train.images.minCoeff() >= 0.0f);
    CHECK(d.train.images.maxCoeff() <= 1.0f);
    CHECK(d.difficulty == level);
  }
}

TEST_CASE("invalid generator options are rejected") {
  ShapesOptions o = small(1);
  o.level = 4;
  CHECK_THROWS_AS(gen_shapes(o), DatasetError);
  o = small(1);
  o.num_classes = 1;
  CHECK_THROWS_AS(gen_shapes(o), DatasetError);
  o = small(1);
  o.train_size = 0;
  CHECK_THROWS_AS(gen_shapes(o), DatasetError);
}

TEST_CASE("the easiest level is linearly separable, the hardest is not") {
  ShapesOptions o = small(1);
  o.train_size = 400;
  o.test_size = 200;
  CHECK(linear_probe_accuracy(gen_shapes(o)) > 0.9);
  o.level = 3;
  CHECK(linear_probe_accuracy(gen_shapes(o)) < 0.6);
}

TEST_CASE("embedding places the tinted source on the canvas") {
  const Dataset d = gen_shapes(small(1));
  EmbedOptions e;
  e.target_resolution = 24;
  e.noise_amplitude = 0.0;
  e.fixed_offset = std::array<int, 2>{3, 5};
  e.fixed_tint = std::array<double, 3>{1.0, 0.5, 0.0};
  const Dataset c = embed_colorize(d, e);
  CHECK(c.channels == 3);
  CHECK(c.resolution == 24);
  for (int i : {0, 7}) {
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        const bool inside = y >= 3 && y < 19 && x >= 5 && x < 21;
        const float src = inside ? d.train.images(d.pixel_index(y - 3, x - 5, 0), i) : 0.0f;
        CHECK(c.train.images(c.pixel_index(y, x, 0), i) == doctest::Approx(src));
        CHECK(c.train.images(c.pixel_index(y, x, 1), i) == doctest::Approx(0.5 * src));
        CHECK(c.train.images(c.pixel_index(y, x, 2), i) == 0.0f);
      }
  }
  CHECK(c.train.labels == d.train.labels);
  e.target_resolution = 8;
  CHECK_THROWS_AS(embed_colorize(d, e), DatasetError);
}

TEST_CASE("identity tear plan changes nothing") {
  const Dataset d = gen_shapes(small(2));
  TearPlan plan = make_tear_plan(16, 4, 1);
  std::iota(plan.permutation.begin(), plan.permutation.end(), 0);
  std::fill(plan.rotation.begin(), plan.rotation.end(), 0);
  const Dataset t = apply_tear(d, plan);
  CHECK(t.train == d.train);
  CHECK(t.test == d.test);
}

TEST_CASE("four quarter turns restore every patch") {
  const Dataset d = gen_shapes(small(3));
  TearPlan plan = make_tear_plan(16, 8, 1);
  std::iota(plan.permutation.begin(), plan.permutation.end(), 0);
  std::fill(plan.rotation.begin(), plan.rotation.end(), 1);
  Dataset t = d;
  for (int k = 0; k < 4; ++k) t = apply_tear(t, plan);
  CHECK(t.train == d.train);
  t = apply_tear(d, plan);
  CHECK_FALSE(t.train == d.train);
}

TEST_CASE("tearing only rearranges pixels") {
  const Dataset d = gen_shapes(small(1));
  const Dataset t = tear_up(d, 4, 9);
  for (int i = 0; i < d.train.size(); i += 9) {
    std::vector<float> a(d.train.images.col(i).begin(), d.train.images.col(i).end());
    std::vector<float> b(t.train.images.col(i).begin(), t.train.images.col(i).end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  CHECK_THROWS_AS(tear_up(d, 5, 1), DatasetError);
}

TEST_CASE("dataset files round trip and reject corruption") {
  const Dataset d = tear_up(gen_shapes(small(2)), 8, 2);
  const std::string path = temp_path("ds.bin");
  save_dataset(path, d);
  CHECK(load_dataset(path) == d);

  std::string bytes = read_file(path);
  bytes[bytes.size() / 2] ^= 0x55;
  write_file_atomic(path, bytes);
  CHECK_THROWS_AS(load_dataset(path), FormatError);
  write_file_atomic(path, bytes.substr(0, bytes.size() - 10));
  CHECK_THROWS_AS(load_dataset(path), FormatError);
  std::filesystem::remove(path);
}
