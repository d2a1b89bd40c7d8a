#include "normkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "normkit/eig.hpp"
#include "normkit/rng.hpp"

namespace normkit {

namespace {

std::vector<double> max_abs_per_row(const Mat& features) {
  std::vector<double> mx(features.rows(), 0.0);
  for (std::size_t i = 0; i < features.rows(); ++i)
    for (std::size_t j = 0; j < features.cols(); ++j)
      mx[i] = std::max(mx[i], std::fabs(features(i, j)));
  return mx;
}

/// Bin index over [-1,1] with a right-closed final interval.
int bin_index(double scaled, int bins) {
  int idx = static_cast<int>(std::floor((scaled + 1.0) * 0.5 * static_cast<double>(bins)));
  return std::clamp(idx, 0, bins - 1);
}

}  // namespace

ConditioningReport condition_number_p(const Mat& features, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("condition_number_p: p must lie in (0, 1]");
  if (features.cols() < 2)
    throw std::invalid_argument("condition_number_p: need at least 2 samples");
  const std::size_t d = features.rows();
  const std::size_t n = features.cols();

  Mat xc(d, n);
  for (std::size_t i = 0; i < d; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += features(i, j);
    mu /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) xc(i, j) = features(i, j) - mu;
  }
  const Mat cov = covariance(xc, n, 0.0);
  EigenDecomp eig = sym_eig(cov);

  const std::size_t idx =
      static_cast<std::size_t>(std::ceil(p * static_cast<double>(d))) - 1;
  ConditioningReport r;
  r.p = p;
  r.eigenvalues = std::move(eig.eigenvalues);
  const double lam_max = r.eigenvalues.front();
  const double lam_p = r.eigenvalues[idx];
  if (lam_p <= 0.0) {
    r.kappa_p = std::numeric_limits<double>::infinity();
    r.degenerate = true;
  } else {
    r.kappa_p = lam_max / lam_p;
  }
  return r;
}

DiversityReport diversity(const Mat& features, int t_bins, int pair_count, std::uint64_t seed) {
  if (features.cols() == 0) throw std::invalid_argument("diversity: zero samples");
  if (features.rows() < 2) throw std::invalid_argument("diversity: need at least 2 dimensions");
  if (t_bins < 1) throw std::invalid_argument("diversity: t_bins must be >= 1");
  if (pair_count < 1) throw std::invalid_argument("diversity: pair_count must be >= 1");
  const std::size_t d = features.rows();
  const std::size_t n = features.cols();

  DiversityReport rep;
  rep.t_bins = t_bins;

  const std::vector<double> mx = max_abs_per_row(features);
  std::vector<double> scale(d);
  for (std::size_t i = 0; i < d; ++i) {
    scale[i] = mx[i] == 0.0 ? 1.0 : 1.0 / mx[i];
    if (mx[i] == 0.0) rep.constant_dims.push_back(i);
  }

  // Distinct unordered pairs, capped by the number available.
  const std::size_t total_pairs = d * (d - 1) / 2;
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(pair_count), total_pairs);
  Rng rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  while (seen.size() < want) {
    std::size_t a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(d) - 1));
    std::size_t b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(d) - 1));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) rep.pairs.push_back({a, b});
  }
  rep.pair_count = static_cast<int>(rep.pairs.size());

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> hist(static_cast<std::size_t>(t_bins) * t_bins);
  for (const auto& [a, b] : rep.pairs) {
    std::fill(hist.begin(), hist.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const int ia = bin_index(features(a, j) * scale[a], t_bins);
      const int ib = bin_index(features(b, j) * scale[b], t_bins);
      hist[static_cast<std::size_t>(ia) * t_bins + ib] += 1.0;
    }
    double entropy = 0.0;
    for (double hcount : hist) {
      if (hcount > 0.0) {
        const double prob = hcount * inv_n;
        entropy -= prob * std::log(prob);
      }
    }
    rep.per_pair.push_back(entropy);
  }
  double sum = 0.0;
  for (double v : rep.per_pair) sum += v;
  rep.gamma = sum / static_cast<double>(rep.per_pair.size());
  return rep;
}

Histogram2D bivariate_histogram(const Mat& features, std::pair<std::size_t, std::size_t> dims,
                                int bins) {
  if (bins < 1) throw std::invalid_argument("bivariate_histogram: bins must be >= 1");
  if (dims.first >= features.rows() || dims.second >= features.rows())
    throw std::invalid_argument("bivariate_histogram: dimension index out of range");
  const std::size_t n = features.cols();
  if (n == 0) throw std::invalid_argument("bivariate_histogram: zero samples");

  Histogram2D h;
  h.dim_x = dims.first;
  h.dim_y = dims.second;
  h.bins = bins;
  h.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  h.marginal_x.assign(bins, 0);
  h.marginal_y.assign(bins, 0);

  double ax = 0.0, ay = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    ax = std::max(ax, std::fabs(features(h.dim_x, j)));
    ay = std::max(ay, std::fabs(features(h.dim_y, j)));
  }
  if (ax == 0.0) ax = 1.0;
  if (ay == 0.0) ay = 1.0;

  for (int k = 0; k <= bins; ++k) {
    const double f = -1.0 + 2.0 * static_cast<double>(k) / bins;
    h.edges_x.push_back(f * ax);
    h.edges_y.push_back(f * ay);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const int ix = bin_index(features(h.dim_x, j) / ax, bins);
    const int iy = bin_index(features(h.dim_y, j) / ay, bins);
    h.counts[static_cast<std::size_t>(ix) * bins + iy] += 1;
    h.marginal_x[ix] += 1;
    h.marginal_y[iy] += 1;
  }
  return h;
}

}  // namespace normkit
