#include "dagsparse/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dagsparse/binary_io.hpp"
#include "dagsparse/rng.hpp"

namespace dagsparse {

namespace {

using Gray = Eigen::MatrixXd;  // resolution x resolution intensity image, (y, x)

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Anti-aliased segment of half-thickness `half` from p to q.
void draw_segment(Gray& img, double py, double px, double qy, double qx, double half, double amp) {
  const double dy = qy - py, dx = qx - px;
  const double len2 = dy * dy + dx * dx;
  for (int y = 0; y < img.rows(); ++y)
    for (int x = 0; x < img.cols(); ++x) {
      double t = len2 > 0 ? ((y - py) * dy + (x - px) * dx) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ey = y - (py + t * dy), ex = x - (px + t * dx);
      const double dist = std::sqrt(ey * ey + ex * ex);
      img(y, x) = std::max(img(y, x), amp * clamp01(1.0 + half - dist));
    }
}

// Level 1: one bar per class at a class-specific orientation through the
// image centre, jittered by up to one pixel.
Gray level1(int k, int classes, int res, Rng& rng) {
  Gray img = Gray::Zero(res, res);
  const double angle = std::numbers::pi * k / classes;
  const double cy = (res - 1) / 2.0 + rng.uniform(-1.0, 1.0);
  const double cx = (res - 1) / 2.0 + rng.uniform(-1.0, 1.0);
  const double half_len = 0.32 * res;
  const double dy = std::sin(angle) * half_len, dx = std::cos(angle) * half_len;
  draw_segment(img, cy - dy, cx - dx, cy + dy, cx + dx, 0.4, rng.uniform(0.7, 1.0));
  for (int i = 0; i < img.size(); ++i) img.data()[i] = clamp01(img.data()[i] + rng.uniform(-0.05, 0.05));
  return img;
}

// Level 2: low-contrast oriented gratings under heavy noise. The phase only
// varies over part of a period, leaving a weak linear signal.
Gray level2(int k, int classes, int res, Rng& rng) {
  Gray img(res, res);
  const double angle = std::numbers::pi * k / classes + rng.uniform(-0.15, 0.15);
  const double freq = 2.0 * std::numbers::pi / (res / 4.0) * rng.uniform(0.8, 1.25);
  const double phase = rng.uniform(-std::numbers::pi / 3, std::numbers::pi / 3);
  const double contrast = rng.uniform(0.1, 0.25);
  const double c = std::cos(angle), s = std::sin(angle);
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x) {
      const double u = (x - res / 2.0) * c + (y - res / 2.0) * s;
      img(y, x) = clamp01(0.5 + contrast * std::cos(freq * u + phase) + rng.uniform(-0.35, 0.35));
    }
  return img;
}

enum class Motif { Plus, Ring, Cross };

void stamp(Gray& img, int cy, int cx, Motif m, double amp) {
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const bool on = m == Motif::Ring   ? (dy != 0 || dx != 0)
                      : m == Motif::Plus ? (dy == 0 || dx == 0)
                                         : (dy == dx || dy == -dx);
      if (on) img(cy + dy, cx + dx) = std::max(img(cy + dy, cx + dx), amp);
    }
}

// Level 3: a plus-shaped and a ring-shaped motif at random positions among
// cross-shaped distractors; the class is the direction from the plus to the
// ring.
Gray level3(int k, int classes, int res, Rng& rng) {
  Gray img = Gray::Zero(res, res);
  const double sector = 2.0 * std::numbers::pi / classes;
  for (;;) {
    const double angle = sector * k + rng.uniform(-0.45, 0.45) * sector;
    const double r = rng.uniform(0.25, 0.55) * res;
    const int ay = 1 + static_cast<int>(rng.below(res - 2));
    const int ax = 1 + static_cast<int>(rng.below(res - 2));
    const int by = static_cast<int>(std::lround(ay - r * std::sin(angle)));
    const int bx = static_cast<int>(std::lround(ax + r * std::cos(angle)));
    if (by < 1 || by > res - 2 || bx < 1 || bx > res - 2) continue;
    for (int i = 0; i < 2; ++i)
      stamp(img, 1 + static_cast<int>(rng.below(res - 2)), 1 + static_cast<int>(rng.below(res - 2)), Motif::Cross,
            rng.uniform(0.5, 0.9));
    stamp(img, ay, ax, Motif::Plus, rng.uniform(0.6, 1.0));
    stamp(img, by, bx, Motif::Ring, rng.uniform(0.6, 1.0));
    break;
  }
  for (int i = 0; i < img.size(); ++i) img.data()[i] = clamp01(img.data()[i] + rng.uniform(-0.15, 0.15));
  return img;
}

Split generate_split(const ShapesOptions& opt, int size, std::uint64_t seed) {
  Split s;
  s.images.resize(static_cast<Eigen::Index>(opt.resolution) * opt.resolution * opt.channels, size);
  s.labels.resize(size);
  std::vector<int> labels(size);
  for (int i = 0; i < size; ++i) labels[i] = i % opt.num_classes;
  Rng(derive_seed(seed, "order")).shuffle(std::span(labels));
  for (int i = 0; i < size; ++i) {
    Rng rng(derive_seed(seed, "image", static_cast<std::uint64_t>(i)));
    const int k = labels[i];
    Gray img = opt.level == 1   ? level1(k, opt.num_classes, opt.resolution, rng)
               : opt.level == 2 ? level2(k, opt.num_classes, opt.resolution, rng)
                                : level3(k, opt.num_classes, opt.resolution, rng);
    auto col = s.images.col(i);
    for (int y = 0; y < opt.resolution; ++y)
      for (int x = 0; x < opt.resolution; ++x)
        for (int c = 0; c < opt.channels; ++c)
          col((y * opt.resolution + x) * opt.channels + c) = static_cast<float>(img(y, x));
    s.labels[i] = k;
  }
  return s;
}

}  // namespace

Dataset gen_shapes(const ShapesOptions& opt) {
  if (opt.level < 1 || opt.level > 3) throw DatasetError("shape level must be 1, 2 or 3");
  if (opt.resolution < 8) throw DatasetError("shape datasets need resolution >= 8");
  if (opt.num_classes < 2) throw DatasetError("need at least two classes");
  if (opt.train_size < 1 || opt.test_size < 0) throw DatasetError("train split must be non-empty");
  if (opt.channels < 1) throw DatasetError("channels must be positive");
  if (opt.train_size % opt.num_classes != 0 || opt.test_size % opt.num_classes != 0)
    throw DatasetError("split sizes must be divisible by the class count " + std::to_string(opt.num_classes));
  Dataset d;
  d.name = "shapes" + std::to_string(opt.level);
  d.resolution = opt.resolution;
  d.channels = opt.channels;
  d.num_classes = opt.num_classes;
  d.difficulty = opt.level;
  d.seed = opt.seed;
  d.train = generate_split(opt, opt.train_size, derive_seed(opt.seed, "train"));
  d.test = generate_split(opt, opt.test_size, derive_seed(opt.seed, "test"));
  return d;
}

namespace {

Split embed_split(const Dataset& d, const Split& src, const EmbedOptions& opt, std::uint64_t seed) {
  const int rt = opt.target_resolution, rs = d.resolution;
  Split out;
  out.labels = src.labels;
  out.images = Matrix<float>::Zero(static_cast<Eigen::Index>(rt) * rt * 3, src.size());
  for (int i = 0; i < src.size(); ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int oy = opt.fixed_offset ? (*opt.fixed_offset)[0] : static_cast<int>(rng.below(rt - rs + 1));
    const int ox = opt.fixed_offset ? (*opt.fixed_offset)[1] : static_cast<int>(rng.below(rt - rs + 1));
    std::array<double, 3> tint{};
    if (opt.fixed_tint) {
      tint = *opt.fixed_tint;
    } else {
      for (double& t : tint) t = rng.uniform();
      const double mx = std::max({tint[0], tint[1], tint[2], 1e-3});
      for (double& t : tint) t /= mx;
    }
    auto dst = out.images.col(i);
    const auto srcimg = src.images.col(i);
    for (int y = 0; y < rt; ++y)
      for (int x = 0; x < rt; ++x)
        for (int c = 0; c < 3; ++c) {
          const int sy = y - oy, sx = x - ox;
          double v = 0.0;
          if (sy >= 0 && sy < rs && sx >= 0 && sx < rs) {
            const int sc = d.channels == 1 ? 0 : std::min(c, d.channels - 1);
            v = srcimg(d.pixel_index(sy, sx, sc)) * tint[c];
          }
          if (opt.noise_amplitude > 0.0) v += rng.uniform(-opt.noise_amplitude, opt.noise_amplitude);
          dst((y * rt + x) * 3 + c) = static_cast<float>(clamp01(v));
        }
  }
  return out;
}

}  // namespace

Dataset embed_colorize(const Dataset& d, const EmbedOptions& opt) {
  if (opt.target_resolution < d.resolution) throw DatasetError("embed target is smaller than the source");
  if (opt.fixed_offset) {
    const auto [oy, ox] = *opt.fixed_offset;
    if (oy < 0 || ox < 0 || oy > opt.target_resolution - d.resolution || ox > opt.target_resolution - d.resolution)
      throw DatasetError("fixed offset outside the canvas");
  }
  Dataset out = d;
  out.resolution = opt.target_resolution;
  out.channels = 3;
  out.name = d.name + "_c";
  out.transforms.push_back("embed_colorize(" + std::to_string(opt.target_resolution) + ")");
  out.train = embed_split(d, d.train, opt, derive_seed(opt.seed, "embed-train"));
  out.test = embed_split(d, d.test, opt, derive_seed(opt.seed, "embed-test"));
  return out;
}

TearPlan make_tear_plan(int resolution, int patch, std::uint64_t seed) {
  if (patch < 1 || resolution % patch != 0)
    throw DatasetError("resolution " + std::to_string(resolution) + " is not divisible by patch " +
                       std::to_string(patch));
  const int per_side = resolution / patch;
  TearPlan plan;
  plan.patch = patch;
  plan.permutation.resize(per_side * per_side);
  for (int i = 0; i < per_side * per_side; ++i) plan.permutation[i] = i;
  Rng rng(derive_seed(seed, "tear"));
  rng.shuffle(std::span(plan.permutation));
  for (int i = 0; i < per_side * per_side; ++i) plan.rotation.push_back(static_cast<int>(rng.below(4)));
  return plan;
}

namespace {

Split tear_split(const Dataset& d, const Split& src, const TearPlan& plan) {
  const int p = plan.patch, per_side = d.resolution / p;
  Split out = src;
  for (int i = 0; i < src.size(); ++i) {
    const auto in = src.images.col(i);
    auto dst = out.images.col(i);
    for (int slot = 0; slot < per_side * per_side; ++slot) {
      const int sp = plan.permutation[slot];
      const int sy0 = (sp / per_side) * p, sx0 = (sp % per_side) * p;
      const int dy0 = (slot / per_side) * p, dx0 = (slot % per_side) * p;
      for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x) {
          // Counter-clockwise rotation by 90 degrees, applied rotation[slot] times.
          int yy = y, xx = x;
          for (int r = 0; r < plan.rotation[slot]; ++r) {
            const int ny = xx, nx = p - 1 - yy;
            yy = ny;
            xx = nx;
          }
          for (int c = 0; c < d.channels; ++c)
            dst(d.pixel_index(dy0 + y, dx0 + x, c)) = in(d.pixel_index(sy0 + yy, sx0 + xx, c));
        }
    }
  }
  return out;
}

}  // namespace

Dataset apply_tear(const Dataset& d, const TearPlan& plan) {
  if (plan.patch < 1 || d.resolution % plan.patch != 0)
    throw DatasetError("resolution " + std::to_string(d.resolution) + " is not divisible by patch " +
                       std::to_string(plan.patch));
  const int slots = (d.resolution / plan.patch) * (d.resolution / plan.patch);
  if (static_cast<int>(plan.permutation.size()) != slots || static_cast<int>(plan.rotation.size()) != slots)
    throw DatasetError("tear plan does not match the patch grid");
  Dataset out = d;
  out.name = d.name + "_t" + std::to_string(plan.patch);
  out.transforms.push_back("tear_up(" + std::to_string(plan.patch) + ")");
  out.train = tear_split(d, d.train, plan);
  out.test = tear_split(d, d.test, plan);
  return out;
}

Dataset tear_up(const Dataset& d, int patch, std::uint64_t seed) {
  return apply_tear(d, make_tear_plan(d.resolution, patch, seed));
}

double linear_probe_accuracy(const Dataset& d, int iterations) {
  const Eigen::MatrixXd x = d.train.images.cast<double>();
  const Eigen::VectorXd mean = x.rowwise().mean();
  Eigen::VectorXd sd = ((x.colwise() - mean).array().square().rowwise().mean()).sqrt();
  sd = sd.cwiseMax(1e-6);
  auto standardize = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    return (m.colwise() - mean).array().colwise() / sd.array();
  };
  const Eigen::MatrixXd xs = standardize(x);
  const Eigen::Index k = d.num_classes, dim = xs.rows(), n = xs.cols();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(k, n);
  for (Eigen::Index i = 0; i < n; ++i) y(d.train.labels[i], i) = 1.0;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, dim), vw = w;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k), vb = b;
  const double lr = 0.5 / std::sqrt(static_cast<double>(dim)), mu = 0.9, l2 = 1e-4;
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd z = w * xs;
    z.colwise() += b;
    Eigen::RowVectorXd mx = z.colwise().maxCoeff();
    Eigen::MatrixXd p = (z.rowwise() - mx).array().exp();
    p = p.array().rowwise() / p.colwise().sum().array();
    const Eigen::MatrixXd g = (p - y) / static_cast<double>(n);
    vw = mu * vw + g * xs.transpose() + l2 * w;
    vb = mu * vb + g.rowwise().sum();
    w -= lr * vw;
    b -= lr * vb;
  }
  Eigen::MatrixXd z = w * standardize(d.test.images.cast<double>());
  z.colwise() += b;
  int correct = 0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    Eigen::Index best;
    z.col(i).maxCoeff(&best);
    correct += best == d.test.labels[i];
  }
  return d.test.size() ? static_cast<double>(correct) / d.test.size() : 0.0;
}

std::vector<int> class_counts(const Split& s, int num_classes) {
  std::vector<int> counts(num_classes, 0);
  for (int l : s.labels) ++counts.at(l);
  return counts;
}

namespace {

constexpr std::uint32_t kTensorVersion = 1;
constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kF32 = 1, kI32 = 2;

void put_images(ByteWriter& w, const Dataset& d, const Split& s) {
  w.bytes("DGTN");
  w.u32(kTensorVersion);
  w.u32(kF32);
  w.u32(4);
  for (std::uint64_t dim : {static_cast<std::uint64_t>(s.size()), std::uint64_t(d.resolution),
                            std::uint64_t(d.resolution), std::uint64_t(d.channels)})
    w.u64(dim);
  // Column-major storage with one image per column is already [N,H,W,C] row-major.
  for (Eigen::Index i = 0; i < s.images.size(); ++i) w.f32(s.images.data()[i]);
}

void put_labels(ByteWriter& w, const Split& s) {
  w.bytes("DGTN");
  w.u32(kTensorVersion);
  w.u32(kI32);
  w.u32(1);
  w.u64(static_cast<std::uint64_t>(s.size()));
  for (int l : s.labels) w.i32(l);
}

std::vector<std::uint64_t> tensor_header(ByteReader& r, std::uint32_t dtype) {
  if (r.bytes(4) != "DGTN") throw FormatError("bad tensor magic");
  if (r.u32() != kTensorVersion) throw FormatError("unsupported tensor version");
  if (r.u32() != dtype) throw FormatError("unexpected tensor dtype");
  std::vector<std::uint64_t> dims(r.u32());
  for (auto& dim : dims) dim = r.u64();
  return dims;
}

Split get_split(ByteReader& r, Dataset& d) {
  Split s;
  const auto dims = tensor_header(r, kF32);
  if (dims.size() != 4 || dims[1] != dims[2]) throw FormatError("image tensor must be [N,H,W,C] with H == W");
  d.resolution = static_cast<int>(dims[1]);
  d.channels = static_cast<int>(dims[3]);
  s.images.resize(static_cast<Eigen::Index>(dims[1] * dims[2] * dims[3]), static_cast<Eigen::Index>(dims[0]));
  for (Eigen::Index i = 0; i < s.images.size(); ++i) s.images.data()[i] = r.f32();
  const auto ldims = tensor_header(r, kI32);
  if (ldims.size() != 1 || ldims[0] != dims[0]) throw FormatError("label tensor does not match images");
  s.labels.resize(ldims[0]);
  for (int& l : s.labels) l = r.i32();
  return s;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& d) {
  ByteWriter p;
  p.u32(static_cast<std::uint32_t>(d.num_classes));
  p.str(d.name);
  p.i32(d.difficulty);
  p.u64(d.seed);
  p.u32(static_cast<std::uint32_t>(d.transforms.size()));
  for (const auto& t : d.transforms) p.str(t);
  put_images(p, d, d.train);
  put_labels(p, d.train);
  put_images(p, d, d.test);
  put_labels(p, d.test);

  ByteWriter w;
  w.bytes("DGDS");
  w.u32(kDatasetVersion);
  w.u32(crc32(p.data()));
  w.bytes(p.data());
  write_file_atomic(path, w.data());
}

Dataset load_dataset(const std::string& path) {
  const std::string bytes = read_file(path);
  ByteReader h(bytes);
  if (bytes.size() < 12 || h.bytes(4) != "DGDS") throw FormatError(path + ": not a dataset file");
  if (h.u32() != kDatasetVersion) throw FormatError(path + ": unsupported dataset version");
  const std::uint32_t crc = h.u32();
  const std::string_view payload = h.bytes(h.remaining());
  if (crc32(payload) != crc) throw FormatError(path + ": checksum error (corrupted or truncated file)");

  ByteReader r(payload);
  Dataset d;
  d.num_classes = static_cast<int>(r.u32());
  d.name = r.str();
  d.difficulty = r.i32();
  d.seed = r.u64();
  d.transforms.resize(r.u32());
  for (auto& t : d.transforms) t = r.str();
  d.train = get_split(r, d);
  const int res = d.resolution, ch = d.channels;
  d.test = get_split(r, d);
  if (res != d.resolution || ch != d.channels) throw FormatError(path + ": train/test shapes differ");
  if (!r.done()) throw FormatError(path + ": trailing bytes");
  for (const Split* s : {&d.train, &d.test})
    for (int l : s->labels)
      if (l < 0 || l >= d.num_classes) throw FormatError(path + ": label out of range");
  return d;
}

}  // namespace dagsparse
