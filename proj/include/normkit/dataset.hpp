#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "normkit/mat.hpp"

namespace normkit {

/// Classification dataset; x is d x n with one sample per column.
struct Dataset {
  Mat x;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return x.rows(); }
};

/// Reads the standard IDX pair (big-endian magic 0x00000803 for images,
/// 0x00000801 for labels). Pixels scaled to [0,1]. `offset`/`limit` select
/// a contiguous sample range (limit 0 = all).
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t offset = 0, std::size_t limit = 0);

/// Offline stand-in for the MNIST layout: 784-dimensional, 10 classes,
/// a few Gaussian modes per class pushed through a fixed ill-conditioned
/// linear map. Deterministic per seed.
Dataset synthetic_blobs(std::size_t n, std::uint64_t seed, std::size_t dim = 784,
                        int classes = 10);

/// Replaces the labels with uniform draws; features untouched, original
/// labels never consulted.
Dataset make_random_labels(const Dataset& base, int num_classes, std::uint64_t seed);

/// X_0 ~ N(0,1) (d x n) pushed through `net_depth` ReLU layers with
/// Gaussian N(0, 2/d) weights. Depth 0 returns the raw Gaussian draw.
Mat gen_gaussian_features(std::size_t d, std::size_t n, int net_depth, std::uint64_t seed);

}  // namespace normkit
