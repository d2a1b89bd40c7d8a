#pragma once

#include <vector>

#include "normkit/eig.hpp"
#include "normkit/mat.hpp"

namespace normkit {

enum class WhitenMethod { Zca, Itn };

struct WhiteningConfig {
  WhitenMethod method = WhitenMethod::Zca;
  double eps = 1e-5;
  int iterations = 5;        // ItN only
  double eig_tie_tol = 1e-8; // ZCA backward only

  void validate() const;
};

/// Everything the ItN backward needs from the forward pass: the
/// trace-normalized covariance, every Newton iterate P_0..P_T, and the
/// trace used for normalization.
struct ItnTrace {
  Mat sigma_n;
  std::vector<Mat> p_list;  // P_0 = I first
  double trace_sigma = 0.0;
};

/// Whitening matrix Sigma^{-1/2} by eigendecomposition. `cache` (optional)
/// receives the decomposition for the backward pass.
Mat zca_forward(const Mat& sigma, EigenDecomp* cache = nullptr);

/// Gradient w.r.t. Sigma given the gradient w.r.t. the whitening matrix.
/// Eigenvalue pairs closer than tie_tol contribute zero to the K factor.
Mat zca_backward(const Mat& d_w, const EigenDecomp& cache, double tie_tol = 1e-8);

/// Newton-Schulz approximation of Sigma^{-1/2}: run `iterations` steps on
/// the trace-normalized covariance, then rescale by 1/sqrt(tr(Sigma)).
Mat itn_forward(const Mat& sigma, int iterations, ItnTrace* cache = nullptr);

/// Same iteration but normalizing by a caller-supplied trace instead of
/// tr(sigma). Used by the Gram-route group whitening, where the iteration
/// runs on the small c x c Gram matrix while the trace comes from the
/// g x g covariance it stands in for.
Mat itn_forward_traced(const Mat& sigma, int iterations, double trace, ItnTrace* cache = nullptr);

/// Reverse iteration k = T..1 plus the trace-correction terms.
Mat itn_backward(const Mat& d_w, const ItnTrace& cache);

}  // namespace normkit
