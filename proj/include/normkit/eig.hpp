#pragma once

#include <vector>

#include "normkit/mat.hpp"

namespace normkit {

/// Result of a symmetric eigendecomposition: Sigma = V diag(lambda) V^T.
/// Eigenvalues sorted descending; column i of `eigenvectors` pairs with
/// eigenvalue i, sign fixed so the largest-magnitude entry is positive.
struct EigenDecomp {
  std::vector<double> eigenvalues;
  Mat eigenvectors;

  Mat reconstruct() const;
};

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Sweeps upper-triangle pairs in a fixed order until the off-diagonal
/// Frobenius norm drops below tol * ||sigma||_F (default tol 1e-12), max
/// 100 sweeps. Throws std::invalid_argument when the input is not
/// symmetric within 1e-12 relative, NumericError when sweeps run out
/// (message carries the residual off-diagonal norm).
EigenDecomp sym_eig(const Mat& sigma, double tol = 1e-12);

/// (1/denom) * xc * xc^T + eps * I for an already-centered xc (d x n).
Mat covariance(const Mat& xc, std::size_t denom, double eps);

/// Ground-truth whitening matrix Sigma^{-1/2} = V diag(lambda^{-1/2}) V^T.
/// Throws NumericError naming the smallest eigenvalue when any lambda <= 0.
Mat inv_sqrt_oracle(const Mat& sigma);

}  // namespace normkit
