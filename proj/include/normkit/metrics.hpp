#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "normkit/mat.hpp"

namespace normkit {

struct ConditioningReport {
  double p = 1.0;
  double kappa_p = 1.0;
  bool degenerate = false;  // lambda_p <= 0 (kappa reported as +inf)
  std::vector<double> eigenvalues;  // descending
};

/// Percentile condition number of the covariance of `features` (d x n):
/// kappa_p = lambda_max / lambda_{ceil(p*d)} with eigenvalues descending.
ConditioningReport condition_number_p(const Mat& features, double p);

struct DiversityReport {
  int t_bins = 0;
  int pair_count = 0;
  double gamma = 0.0;  // mean Shannon entropy over sampled dimension pairs
  std::vector<double> per_pair;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> constant_dims;  // axes collapsing to a single bin
};

/// Entropy-based feature diversity Gamma_{2,T}. Each dimension is scaled
/// into [-1,1] by its maximum absolute value, `pair_count` distinct
/// dimension pairs are drawn with the seeded generator, each pair is
/// histogrammed into t_bins^2 equal cells over [-1,1]^2 (points at +1 land
/// in the last bin) and the Shannon entropies -sum p log p are averaged.
///
/// The paper's diversity formula reads sum p log p, which is non-positive;
/// the sign is flipped here so that larger values mean more diverse.
DiversityReport diversity(const Mat& features, int t_bins, int pair_count, std::uint64_t seed);

struct Histogram2D {
  std::size_t dim_x = 0, dim_y = 0;
  int bins = 0;
  std::vector<long long> counts;  // bins x bins, row = dim_x bin
  std::vector<long long> marginal_x, marginal_y;
  std::vector<double> edges_x, edges_y;  // bins+1 edges in original units

  long long at(int ix, int iy) const { return counts[static_cast<std::size_t>(ix) * bins + iy]; }
};

/// Counts of feature pairs over a bins x bins grid spanning
/// [-max|x|, max|x|] per dimension.
Histogram2D bivariate_histogram(const Mat& features, std::pair<std::size_t, std::size_t> dims,
                                int bins);

}  // namespace normkit
