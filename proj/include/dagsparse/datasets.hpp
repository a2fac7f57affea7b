#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dagsparse/tensor.hpp"

namespace dagsparse {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One split of an image dataset. Column i of `images` is image i in
/// row-major (y, x, channel) order with the channel index fastest; all
/// values lie in [0, 1].
struct Split {
  Matrix<float> images;
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  bool operator==(const Split& o) const { return images == o.images && labels == o.labels; }
};

struct Dataset {
  std::string name;
  int resolution = 0;
  int channels = 0;
  int num_classes = 0;
  int difficulty = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> transforms;
  Split train;
  Split test;

  int pixel_index(int y, int x, int c) const { return (y * resolution + x) * channels + c; }
  bool operator==(const Dataset&) const = default;
};

/// Copies the selected images into a channels x (batch*res*res) tensor.
template <typename Scalar>
Tensor<Scalar> make_batch(const Dataset& d, const Split& split, std::span<const int> indices) {
  const int hw = d.resolution * d.resolution;
  Matrix<Scalar> data(d.channels, static_cast<Eigen::Index>(indices.size()) * hw);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    Eigen::Map<const Matrix<float>> img(split.images.col(indices[i]).data(), d.channels, hw);
    data.middleCols(static_cast<Eigen::Index>(i) * hw, hw) = img.cast<Scalar>();
  }
  return Tensor<Scalar>(std::move(data), static_cast<int>(indices.size()), d.resolution, d.resolution);
}

struct ShapesOptions {
  int level = 1;  // 1: fixed-position shapes, 2: noisy oriented textures, 3: relative motif arrangement
  int train_size = 4000;
  int test_size = 1000;
  int resolution = 16;
  int channels = 1;
  int num_classes = 10;
  std::uint64_t seed = 0;
};

/// Seeded synthetic difficulty ladder.
Dataset gen_shapes(const ShapesOptions& opt);

struct EmbedOptions {
  int target_resolution = 32;
  double noise_amplitude = 0.1;
  std::optional<std::array<int, 2>> fixed_offset;  // (y, x)
  std::optional<std::array<double, 3>> fixed_tint;
  std::uint64_t seed = 0;
};

/// Places each image at a random offset inside a larger 3-channel canvas,
/// tints it with a random colour and adds uniform colour noise.
Dataset embed_colorize(const Dataset& d, const EmbedOptions& opt);

/// A fixed scramble of square patches: destination slot i receives source
/// patch permutation[i], rotated counter-clockwise by 90*rotation[i] degrees.
struct TearPlan {
  int patch = 8;
  std::vector<int> permutation;
  std::vector<int> rotation;
};

TearPlan make_tear_plan(int resolution, int patch, std::uint64_t seed);
Dataset apply_tear(const Dataset& d, const TearPlan& plan);
Dataset tear_up(const Dataset& d, int patch, std::uint64_t seed);

/// Test accuracy of a softmax-regression probe trained on raw pixels.
double linear_probe_accuracy(const Dataset& d, int iterations = 300);

/// Per-class sample counts of a split.
std::vector<int> class_counts(const Split& s, int num_classes);

// Raw tensor file format, little-endian:
//   "DGTN" | u32 version | u32 dtype (1 = f32, 2 = i32) | u32 rank |
//   u64 dims[rank] | row-major payload
// A dataset file is "DGDS" | u32 version | u32 crc32(payload) | payload, with
// payload u32 num_classes | name | i32 difficulty | u64 seed | u32 transform
// count | transforms | four tensors: train images [N,H,W,C], train labels [N],
// test images, test labels. Strings are u32 length + bytes.
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

}  // namespace dagsparse
