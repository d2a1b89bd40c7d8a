#include "normkit/whitening.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "normkit/errors.hpp"

namespace normkit {

void WhiteningConfig::validate() const {
  if (eps <= 0.0) throw std::invalid_argument("WhiteningConfig: eps must be > 0");
  if (iterations < 1) throw std::invalid_argument("WhiteningConfig: iterations must be >= 1");
}

Mat zca_forward(const Mat& sigma, EigenDecomp* cache) {
  EigenDecomp eig = sym_eig(sigma);
  const double smallest = eig.eigenvalues.back();
  if (smallest <= 0.0) {
    throw NumericError("zca_forward: covariance not positive definite (smallest eigenvalue " +
                       std::to_string(smallest) + "); increase eps");
  }
  const std::size_t d = sigma.rows();
  Mat scaled = eig.eigenvectors;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) scaled(i, j) /= std::sqrt(eig.eigenvalues[j]);
  Mat w = symmetrized(matmul_nt(scaled, eig.eigenvectors));
  if (cache != nullptr) *cache = std::move(eig);
  return w;
}

Mat zca_backward(const Mat& d_w, const EigenDecomp& cache, double tie_tol) {
  const std::size_t d = cache.eigenvalues.size();
  if (d_w.rows() != d || d_w.cols() != d)
    throw std::invalid_argument("zca_backward: gradient shape does not match cache");
  const Mat& v = cache.eigenvectors;
  const std::vector<double>& lam = cache.eigenvalues;

  // dL/dD = (G + G^T) D Lambda^{-1/2}
  Mat g_d = matmul(d_w + d_w.transposed(), v);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) g_d(i, j) /= std::sqrt(lam[j]);

  // inner = K^T (*) (D^T dL/dD), diagonal replaced by dL/dLambda
  Mat inner = matmul_tn(v, g_d);
  const Mat vt_gw_v = matmul(matmul_tn(v, d_w), v);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (i == j) {
        inner(i, i) = vt_gw_v(i, i) * (-0.5) * std::pow(lam[i], -1.5);
      } else {
        const double diff = lam[j] - lam[i];  // K^T entry
        inner(i, j) = std::fabs(diff) < tie_tol ? 0.0 : inner(i, j) / diff;
      }
    }
  }
  return matmul_nt(matmul(v, inner), v);
}

Mat itn_forward(const Mat& sigma, int iterations, ItnTrace* cache) {
  return itn_forward_traced(sigma, iterations, sigma.trace(), cache);
}

namespace {

// Plain serial d x d products into caller-owned buffers (out must not
// alias an input). The Newton iteration lives on small group covariances,
// where allocation and dispatch overhead would dominate the arithmetic.
void small_matmul_into(const Mat& a, const Mat& b, Mat& out) {
  const std::size_t d = a.rows();
  double* o = out.data();
  for (std::size_t i = 0; i < d; ++i) {
    double* oi = o + i * d;
    for (std::size_t j = 0; j < d; ++j) oi[j] = 0.0;
    const double* ai = a.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) {
      const double aik = ai[k];
      const double* bk = b.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) oi[j] += aik * bk[j];
    }
  }
}

// out = a^T * b
void small_matmul_tn_into(const Mat& a, const Mat& b, Mat& out) {
  const std::size_t d = a.rows();
  double* o = out.data();
  for (std::size_t i = 0; i < d * d; ++i) o[i] = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double* ak = a.data() + k * d;
    const double* bk = b.data() + k * d;
    for (std::size_t i = 0; i < d; ++i) {
      const double aki = ak[i];
      double* oi = o + i * d;
      for (std::size_t j = 0; j < d; ++j) oi[j] += aki * bk[j];
    }
  }
}

// out = a * b^T
void small_matmul_nt_into(const Mat& a, const Mat& b, Mat& out) {
  const std::size_t d = a.rows();
  for (std::size_t i = 0; i < d; ++i) {
    const double* ai = a.data() + i * d;
    double* oi = out.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double* bj = b.data() + j * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += ai[k] * bj[k];
      oi[j] = s;
    }
  }
}

}  // namespace

Mat itn_forward_traced(const Mat& sigma, int iterations, double trace, ItnTrace* cache) {
  if (sigma.rows() != sigma.cols())
    throw std::invalid_argument("itn_forward: matrix is not square");
  if (iterations < 1) throw std::invalid_argument("itn_forward: iterations must be >= 1");
  if (!(trace > 0.0))
    throw NumericError("itn_forward: trace must be positive, got " + std::to_string(trace));
  sigma.require_finite("itn_forward input");

  const std::size_t d = sigma.rows();
  Mat sigma_n = sigma;
  sigma_n *= 1.0 / trace;

  std::vector<Mat> p_list;
  p_list.reserve(static_cast<std::size_t>(iterations) + 1);
  p_list.push_back(Mat::identity(d));
  Mat p2(d, d), p3(d, d);
  for (int k = 1; k <= iterations; ++k) {
    const Mat& p = p_list.back();
    small_matmul_into(p, p, p2);
    small_matmul_into(p2, p, p3);
    Mat next(d, d);
    small_matmul_into(p3, sigma_n, next);
    for (std::size_t i = 0; i < next.size(); ++i)
      next.data()[i] = 0.5 * (3.0 * p.data()[i] - next.data()[i]);
    if (!next.all_finite())
      throw NumericError("itn_forward: non-finite iterate at step " + std::to_string(k));
    p_list.push_back(std::move(next));
  }

  Mat w = p_list.back();
  w *= 1.0 / std::sqrt(trace);
  if (cache != nullptr) {
    cache->sigma_n = std::move(sigma_n);
    cache->p_list = std::move(p_list);
    cache->trace_sigma = trace;
  }
  return w;
}

Mat itn_backward(const Mat& d_w, const ItnTrace& cache) {
  const std::size_t d = cache.sigma_n.rows();
  if (d_w.rows() != d || d_w.cols() != d)
    throw std::invalid_argument("itn_backward: gradient shape does not match cache");
  const double t = cache.trace_sigma;
  const Mat& sigma_n = cache.sigma_n;
  const int iterations = static_cast<int>(cache.p_list.size()) - 1;

  Mat d_p = d_w * (1.0 / std::sqrt(t));
  Mat d_sigma_n(d, d);
  Mat p2(d, d), p3(d, d), tmp_a(d, d), tmp_b(d, d), tmp_c(d, d);
  for (int k = iterations; k >= 1; --k) {
    const Mat& p = cache.p_list[static_cast<std::size_t>(k) - 1];
    small_matmul_into(p, p, p2);
    small_matmul_into(p2, p, p3);
    small_matmul_tn_into(p3, d_p, tmp_a);  // P^3T dP
    for (std::size_t i = 0; i < d_sigma_n.size(); ++i)
      d_sigma_n.data()[i] -= 0.5 * tmp_a.data()[i];

    Mat d_prev = d_p * 1.5;
    small_matmul_into(p2, sigma_n, tmp_a);     // P^2 Sigma_N
    small_matmul_nt_into(d_p, tmp_a, tmp_b);   // dP (P^2 Sigma_N)^T
    d_prev -= tmp_b * 0.5;
    small_matmul_tn_into(p2, d_p, tmp_a);      // (P^2)^T dP
    small_matmul_nt_into(tmp_a, sigma_n, tmp_b);
    d_prev -= tmp_b * 0.5;
    small_matmul_tn_into(p, d_p, tmp_a);       // P^T dP
    small_matmul_into(p, sigma_n, tmp_b);      // P Sigma_N
    small_matmul_nt_into(tmp_a, tmp_b, tmp_c);
    d_prev -= tmp_c * 0.5;
    d_p = std::move(d_prev);
  }

  Mat d_sigma = d_sigma_n * (1.0 / t);
  const double tr_dsn_sigma = dot(d_sigma_n, sigma_n) * t;  // tr(dSigma_N^T Sigma)
  const double tr_dw_pt = dot(d_w, cache.p_list.back());    // tr(dW^T P_T)
  const double diag_term =
      -tr_dsn_sigma / (t * t) - 0.5 * tr_dw_pt / (t * std::sqrt(t));
  for (std::size_t i = 0; i < d; ++i) d_sigma(i, i) += diag_term;
  return d_sigma;
}

}  // namespace normkit
