#include "normkit/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace normkit {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // 128-bit multiply keeps the draw unbiased enough for span << 2^64.
  return lo + static_cast<std::int64_t>(gen_() % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Mat Rng::normal_mat(std::size_t rows, std::size_t cols) {
  Mat m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = normal();
  return m;
}

Mat Rng::orthogonal(std::size_t n) {
  Mat a = normal_mat(n, n);
  // Modified Gram-Schmidt on columns.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += a(i, k) * a(i, j);
      for (std::size_t i = 0; i < n; ++i) a(i, j) -= proj * a(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-12) return orthogonal(n);  // degenerate draw, retry
    for (std::size_t i = 0; i < n; ++i) a(i, j) /= norm;
  }
  return a;
}

Mat Rng::spd_with_spectrum(const std::vector<double>& eigenvalues) {
  const std::size_t n = eigenvalues.size();
  const Mat q = orthogonal(n);
  Mat scaled = q;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= eigenvalues[j];
  return symmetrized(matmul_nt(scaled, q));
}

Mat Rng::spd_gram(std::size_t d, std::size_t n, double ridge) {
  const Mat a = normal_mat(d, n);
  Mat s = matmul_nt(a, a);
  s *= 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < d; ++i) s(i, i) += ridge;
  return s;
}

std::uint64_t resolve_seed(const std::uint64_t* flag_value, std::uint64_t fallback) {
  if (flag_value != nullptr) return *flag_value;
  if (const char* env = std::getenv("NORMKIT_SEED")) {
    return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  }
  return fallback;
}

}  // namespace normkit
