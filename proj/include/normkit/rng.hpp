#pragma once

#include <cstdint>
#include <random>

#include "normkit/mat.hpp"

namespace normkit {

/// Deterministic random source. Wraps std::mt19937_64 but generates
/// uniforms and normals itself (bit conversion + Marsaglia polar), so a
/// given seed yields the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi] via rejection-free modulo of a wide draw.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal, Marsaglia polar method (no trig calls).
  double normal();

  Mat normal_mat(std::size_t rows, std::size_t cols);

  /// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
  Mat orthogonal(std::size_t n);

  /// Random SPD matrix with the given spectrum in a random basis.
  Mat spd_with_spectrum(const std::vector<double>& eigenvalues);

  /// SPD built as A A^T / n + ridge * I from a Gaussian d x n draw.
  Mat spd_gram(std::size_t d, std::size_t n, double ridge);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Global seed fallback: --seed flag if given, else NORMKIT_SEED env var,
/// else the provided default.
std::uint64_t resolve_seed(const std::uint64_t* flag_value, std::uint64_t fallback);

}  // namespace normkit
