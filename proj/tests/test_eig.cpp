#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "normkit/eig.hpp"
#include "normkit/errors.hpp"
#include "normkit/rng.hpp"
#include "testutil.hpp"

using namespace normkit;

TEST_CASE("sym_eig on an already diagonal matrix") {
  const EigenDecomp e = sym_eig(Mat{{4, 0}, {0, 1}});
  CHECK(e.eigenvalues[0] == doctest::Approx(4.0));
  CHECK(e.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(max_abs_diff(e.eigenvectors, Mat::identity(2)) < 1e-14);
}

TEST_CASE("sym_eig classic 2x2") {
  const EigenDecomp e = sym_eig(Mat{{2, 1}, {1, 2}});
  CHECK(e.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(e.eigenvalues[1] == doctest::Approx(1.0));
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::fabs(std::fabs(e.eigenvectors(0, 0)) - s) < 1e-12);
  // sign fix: largest-magnitude entry positive
  CHECK(e.eigenvectors(0, 0) > 0.0);
  CHECK(e.eigenvectors(0, 1) > 0.0);
}

TEST_CASE("sym_eig reconstructs random SPD") {
  Rng rng(11);
  const Mat a = rng.normal_mat(8, 8);
  Mat sigma = matmul_nt(a, a);
  for (std::size_t i = 0; i < 8; ++i) sigma(i, i) += 1.0;
  sigma = symmetrized(sigma);
  const EigenDecomp e = sym_eig(sigma);
  CHECK(max_abs_diff(e.reconstruct(), sigma) < 1e-10);
  CHECK(max_abs_diff(matmul_tn(e.eigenvectors, e.eigenvectors), Mat::identity(8)) < 1e-10);
  for (std::size_t i = 0; i + 1 < 8; ++i)
    CHECK(e.eigenvalues[i] >= e.eigenvalues[i + 1]);
}

TEST_CASE("sym_eig reconstruction property over scales") {
  Rng rng(5);
  for (double scale : {1e-3, 1.0, 1e3}) {
    Mat s = test::random_spd_kappa(6, 50.0, rng);
    s *= scale;
    const EigenDecomp e = sym_eig(s);
    CHECK(max_abs_diff(e.reconstruct(), s) < 1e-8 * std::max(1.0, s.max_abs()));
  }
}

TEST_CASE("sym_eig determinism") {
  Rng rng(2);
  const Mat s = test::random_spd_kappa(7, 10.0, rng);
  const EigenDecomp a = sym_eig(s);
  const EigenDecomp b = sym_eig(s);
  CHECK(max_abs_diff(a.eigenvectors, b.eigenvectors) == 0.0);
}

TEST_CASE("sym_eig rejects non-symmetric input") {
  CHECK_THROWS_AS(sym_eig(Mat{{1, 2}, {0, 1}}), std::invalid_argument);
}

TEST_CASE("covariance basics") {
  SUBCASE("zero input gives eps I") {
    const Mat xc(3, 10);
    const Mat s = covariance(xc, 10, 1e-5);
    CHECK(max_abs_diff(s, Mat::identity(3) * 1e-5) == 0.0);
  }
  SUBCASE("unit variance by construction") {
    const Mat xc{{1, -1}};
    const Mat s = covariance(xc, 2, 0.0);
    CHECK(s(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("denom zero rejected") {
    CHECK_THROWS_AS(covariance(Mat(2, 2), 0, 0.0), std::invalid_argument);
  }
  SUBCASE("matches double-loop accumulation") {
    Rng rng(9);
    const Mat xc = rng.normal_mat(4, 64);
    const Mat s = covariance(xc, 64, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 64; ++k) acc += xc(i, k) * xc(j, k);
        CHECK(std::fabs(s(i, j) - acc / 64.0) < 1e-12);
      }
    }
  }
  SUBCASE("eigenvalues at least eps") {
    Rng rng(4);
    const Mat xc = rng.normal_mat(5, 3);  // rank deficient on purpose
    const Mat s = covariance(xc, 3, 1e-4);
    const EigenDecomp e = sym_eig(s);
    for (double lam : e.eigenvalues) CHECK(lam >= 1e-4 - 1e-12);
  }
}

TEST_CASE("inv_sqrt_oracle") {
  SUBCASE("identity") {
    CHECK(max_abs_diff(inv_sqrt_oracle(Mat::identity(3)), Mat::identity(3)) < 1e-14);
  }
  SUBCASE("diagonal roots") {
    const Mat w = inv_sqrt_oracle(Mat{{4, 0}, {0, 1}});
    CHECK(w(0, 0) == doctest::Approx(0.5));
    CHECK(w(1, 1) == doctest::Approx(1.0));
  }
  SUBCASE("W Sigma W = I and commutation") {
    Rng rng(13);
    const Mat sigma = test::random_spd_kappa(6, 30.0, rng);
    const Mat w = inv_sqrt_oracle(sigma);
    CHECK(max_abs_diff(matmul(matmul(w, sigma), w), Mat::identity(6)) < 1e-9);
    CHECK(max_abs_diff(matmul(w, sigma), matmul(sigma, w)) < 1e-8);
    CHECK(max_abs_diff(w, w.transposed()) < 1e-12);
  }
  SUBCASE("rejects non-PD with the smallest eigenvalue named") {
    const Mat bad{{1, 0}, {0, -2}};
    CHECK_THROWS_WITH_AS(inv_sqrt_oracle(bad),
                         doctest::Contains("smallest eigenvalue"), NumericError);
  }
}
