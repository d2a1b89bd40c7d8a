#include "normkit/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "normkit/rng.hpp"

namespace normkit {

namespace {

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("load_idx: truncated header in " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t offset, std::size_t limit) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
  if (read_u32_be(img, images_path) != 0x00000803u)
    throw std::runtime_error("load_idx: bad image magic in " + images_path);
  const std::size_t count = read_u32_be(img, images_path);
  const std::size_t rows = read_u32_be(img, images_path);
  const std::size_t cols = read_u32_be(img, images_path);
  const std::size_t dim = rows * cols;

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);
  if (read_u32_be(lab, labels_path) != 0x00000801u)
    throw std::runtime_error("load_idx: bad label magic in " + labels_path);
  const std::size_t lcount = read_u32_be(lab, labels_path);
  if (lcount != count)
    throw std::runtime_error("load_idx: image/label count mismatch");

  if (offset >= count) throw std::runtime_error("load_idx: offset beyond dataset");
  const std::size_t n = limit == 0 ? count - offset : std::min(limit, count - offset);

  img.seekg(static_cast<std::streamoff>(16 + offset * dim));
  lab.seekg(static_cast<std::streamoff>(8 + offset));

  Dataset ds;
  ds.x = Mat(dim, n);
  ds.labels.resize(n);
  ds.num_classes = 10;
  std::vector<unsigned char> buf(dim);
  for (std::size_t j = 0; j < n; ++j) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
    if (!img) throw std::runtime_error("load_idx: truncated image data in " + images_path);
    for (std::size_t i = 0; i < dim; ++i) ds.x(i, j) = static_cast<double>(buf[i]) / 255.0;
    unsigned char y;
    lab.read(reinterpret_cast<char*>(&y), 1);
    if (!lab) throw std::runtime_error("load_idx: truncated label data in " + labels_path);
    if (y > 9) throw std::runtime_error("load_idx: label out of range");
    ds.labels[j] = static_cast<int>(y);
  }
  return ds;
}

Dataset synthetic_blobs(std::size_t n, std::uint64_t seed, std::size_t dim, int classes) {
  // Layout mirrors the numbers used for desk-scale runs: a 32-dim latent,
  // 6 overlapping modes per class, mapped through a spectrum-decayed
  // matrix. The class structure is deliberately hard enough that a
  // four-layer MLP does not saturate within a handful of epochs, so
  // normalization quality shows up in the training curves.
  constexpr std::size_t kLatent = 32;
  constexpr int kModes = 6;
  constexpr double kCenterScale = 1.5;
  constexpr double kNoise = 1.6;
  constexpr double kPixelNoise = 0.12;

  Rng rng(seed);
  Mat mix = rng.normal_mat(dim, kLatent);
  // Column k scaled by exp(-3k/latent): condition number ~ e^3.
  for (std::size_t k = 0; k < kLatent; ++k) {
    const double s = std::exp(-3.0 * static_cast<double>(k) / kLatent) /
                     std::sqrt(static_cast<double>(kLatent));
    for (std::size_t i = 0; i < dim; ++i) mix(i, k) *= s;
  }

  Mat centers(static_cast<std::size_t>(classes) * kModes, kLatent);
  for (std::size_t i = 0; i < centers.size(); ++i)
    centers.data()[i] = kCenterScale * rng.normal();

  Dataset ds;
  ds.x = Mat(dim, n);
  ds.labels.resize(n);
  ds.num_classes = classes;
  std::vector<double> z(kLatent);
  for (std::size_t j = 0; j < n; ++j) {
    const int y = static_cast<int>(rng.uniform_int(0, classes - 1));
    const int mode = static_cast<int>(rng.uniform_int(0, kModes - 1));
    const std::size_t cidx = static_cast<std::size_t>(y) * kModes + static_cast<std::size_t>(mode);
    for (std::size_t k = 0; k < kLatent; ++k) z[k] = centers(cidx, k) + kNoise * rng.normal();
    for (std::size_t i = 0; i < dim; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < kLatent; ++k) v += mix(i, k) * z[k];
      ds.x(i, j) = v + kPixelNoise * rng.normal();
    }
    ds.labels[j] = y;
  }
  return ds;
}

Dataset make_random_labels(const Dataset& base, int num_classes, std::uint64_t seed) {
  if (num_classes < 2)
    throw std::invalid_argument("make_random_labels: num_classes must be >= 2");
  Dataset out;
  out.x = base.x;
  out.num_classes = num_classes;
  out.labels.resize(base.size());
  Rng rng(seed);
  for (std::size_t j = 0; j < out.labels.size(); ++j)
    out.labels[j] = static_cast<int>(rng.uniform_int(0, num_classes - 1));
  return out;
}

Mat gen_gaussian_features(std::size_t d, std::size_t n, int net_depth, std::uint64_t seed) {
  if (d == 0 || n == 0) throw std::invalid_argument("gen_gaussian_features: sizes must be positive");
  if (net_depth < 0) throw std::invalid_argument("gen_gaussian_features: depth must be >= 0");
  Rng rng(seed);
  Mat x = rng.normal_mat(d, n);
  for (int layer = 0; layer < net_depth; ++layer) {
    Mat w = rng.normal_mat(d, d);
    w *= std::sqrt(2.0 / static_cast<double>(d));
    Mat next = matmul(w, x);
    for (std::size_t i = 0; i < next.size(); ++i)
      next.data()[i] = std::max(next.data()[i], 0.0);
    x = std::move(next);
  }
  return x;
}

}  // namespace normkit
