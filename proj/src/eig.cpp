#include "normkit/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "normkit/errors.hpp"

namespace normkit {

namespace {

constexpr int kMaxSweeps = 100;

double off_diag_norm(const Mat& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

void check_symmetric(const Mat& sigma) {
  if (sigma.rows() != sigma.cols())
    throw std::invalid_argument("sym_eig: matrix is not square");
  const double scale = std::max(sigma.max_abs(), 1e-300);
  for (std::size_t i = 0; i < sigma.rows(); ++i)
    for (std::size_t j = i + 1; j < sigma.cols(); ++j)
      if (std::fabs(sigma(i, j) - sigma(j, i)) > 1e-12 * scale)
        throw std::invalid_argument(
            "sym_eig: symmetry violation at (" + std::to_string(i) + "," +
            std::to_string(j) + "): |" + std::to_string(sigma(i, j)) + " - " +
            std::to_string(sigma(j, i)) + "| exceeds 1e-12 relative");
}

}  // namespace

Mat EigenDecomp::reconstruct() const {
  const std::size_t d = eigenvalues.size();
  Mat scaled = eigenvectors;  // V * diag(lambda)
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) scaled(i, j) *= eigenvalues[j];
  return matmul_nt(scaled, eigenvectors);
}

EigenDecomp sym_eig(const Mat& sigma, double tol) {
  check_symmetric(sigma);
  sigma.require_finite("sym_eig input");
  const std::size_t d = sigma.rows();

  Mat a = symmetrized(sigma);  // work copy; exact symmetry keeps rotations clean
  Mat v = Mat::identity(d);
  const double threshold = tol * std::max(a.frobenius_norm(), 1e-300);

  if (d > 1) {
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
      if (off_diag_norm(a) <= threshold) break;
      for (std::size_t p = 0; p + 1 < d; ++p) {
        for (std::size_t q = p + 1; q < d; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          const double app = a(p, p);
          const double aqq = a(q, q);
          // rotation angle from the classic 2x2 reduction
          const double theta = 0.5 * (aqq - app) / apq;
          const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = t * c;

          for (std::size_t k = 0; k < d; ++k) {
            const double akp = a(k, p);
            const double akq = a(k, q);
            a(k, p) = c * akp - s * akq;
            a(k, q) = s * akp + c * akq;
          }
          for (std::size_t k = 0; k < d; ++k) {
            const double apk = a(p, k);
            const double aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
    if (sweep == kMaxSweeps && off_diag_norm(a) > threshold) {
      throw NumericError("sym_eig: no convergence after " + std::to_string(kMaxSweeps) +
                         " sweeps; residual off-diagonal norm " +
                         std::to_string(off_diag_norm(a)));
    }
  }

  EigenDecomp out;
  out.eigenvalues.resize(d);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&a](std::size_t l, std::size_t r) { return a(l, l) > a(r, r); });

  out.eigenvectors = Mat(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t src = order[j];
    out.eigenvalues[j] = a(src, src);
    // sign fix: largest-magnitude entry of the column made positive
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (std::fabs(v(i, src)) > best) {
        best = std::fabs(v(i, src));
        arg = i;
      }
    }
    const double flip = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i) out.eigenvectors(i, j) = flip * v(i, src);
  }
  return out;
}

Mat covariance(const Mat& xc, std::size_t denom, double eps) {
  if (denom == 0) throw std::invalid_argument("covariance: denom must be positive");
  if (eps < 0.0) throw std::invalid_argument("covariance: eps must be >= 0");
  xc.require_finite("covariance input");
  Mat s = matmul_nt(xc, xc);
  s *= 1.0 / static_cast<double>(denom);
  s = symmetrized(s);
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += eps;
  return s;
}

Mat inv_sqrt_oracle(const Mat& sigma) {
  const EigenDecomp eig = sym_eig(sigma);
  const double smallest = eig.eigenvalues.back();
  if (smallest <= 0.0) {
    throw NumericError("inv_sqrt_oracle: matrix is not positive definite; smallest eigenvalue " +
                       std::to_string(smallest));
  }
  const std::size_t d = sigma.rows();
  Mat scaled = eig.eigenvectors;  // V * diag(lambda^{-1/2})
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) scaled(i, j) /= std::sqrt(eig.eigenvalues[j]);
  return symmetrized(matmul_nt(scaled, eig.eigenvectors));
}

}  // namespace normkit
