#include "normkit/constraints.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "normkit/errors.hpp"
#include "normkit/norm_layers.hpp"
#include "normkit/rng.hpp"

namespace normkit {

namespace {

constexpr double kRankThreshold = 1e-8;
constexpr double kFeasibleEps = 1e-9;

void check_group(NormMethod method, std::size_t d, std::size_t g) {
  if ((method == NormMethod::GN || method == NormMethod::GW) && (g == 0 || d % g != 0))
    throw std::invalid_argument("constraint analysis: g must divide d for " + to_string(method));
}

/// Singular values of a (rows x cols) matrix by Hestenes one-sided Jacobi
/// on the rows. Small singular values come out near machine precision,
/// which keeps the rank threshold meaningful.
std::vector<double> singular_values_rows(Mat j) {
  const std::size_t r = j.rows();
  const std::size_t n = j.cols();
  std::vector<double> sq(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += j(i, k) * j(i, k);
    sq[i] = s;
  }
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < r; ++p) {
      for (std::size_t q = p + 1; q < r; ++q) {
        double alpha = sq[p], beta = sq[q], gamma = 0.0;
        for (std::size_t k = 0; k < n; ++k) gamma += j(p, k) * j(q, k);
        if (std::fabs(gamma) <= 1e-14 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double jp = j(p, k);
          const double jq = j(q, k);
          j(p, k) = c * jp - s * jq;
          j(q, k) = s * jp + c * jq;
        }
        sq[p] = alpha - t * gamma;
        sq[q] = beta + t * gamma;
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += j(i, k) * j(i, k);
    sv[i] = std::sqrt(s);
  }
  return sv;
}

std::size_t rank_from_singular_values(const std::vector<double>& sv) {
  double smax = 0.0;
  for (double s : sv) smax = std::max(smax, s);
  if (smax == 0.0) return 0;
  std::size_t rank = 0;
  for (double s : sv)
    if (s > kRankThreshold * smax) ++rank;
  return rank;
}

/// Feasible point: normalize a random Gaussian matrix with the method
/// under certification (tiny eps keeps the point on the constraint set).
Mat feasible_point(NormMethod method, std::size_t d, std::size_t m, std::size_t g, Rng& rng) {
  const Mat x = rng.normal_mat(d, m);
  switch (method) {
    case NormMethod::BN:
      return standardize_train(x, StandardizeAxis::PerRowOverCols, kFeasibleEps);
    case NormMethod::BW: {
      WhiteningConfig cfg;
      cfg.method = WhitenMethod::Zca;
      cfg.eps = kFeasibleEps;
      BwCache cache;
      return bw_forward_train(x, cfg, std::nullopt, &cache);
    }
    case NormMethod::GN: {
      const GroupSpec spec = GroupSpec::make(d, g);
      Mat out(d, m);
      for (std::size_t s = 0; s < m; ++s) {
        std::vector<double> col(d);
        for (std::size_t i = 0; i < d; ++i) col[i] = x(i, s);
        const Mat grouped = group_divide(col, spec);
        const Mat norm = standardize_train(grouped, StandardizeAxis::PerRowOverCols, kFeasibleEps);
        const std::vector<double> merged = group_merge(norm, spec);
        for (std::size_t i = 0; i < d; ++i) out(i, s) = merged[i];
      }
      return out;
    }
    case NormMethod::GW: {
      const GroupSpec spec = GroupSpec::make(d, g);
      WhiteningConfig cfg;
      cfg.method = WhitenMethod::Zca;
      cfg.eps = kFeasibleEps;
      Mat out(d, m);
      for (std::size_t s = 0; s < m; ++s) {
        std::vector<double> col(d);
        for (std::size_t i = 0; i < d; ++i) col[i] = x(i, s);
        const std::vector<double> merged = gw_forward(col, spec, cfg);
        for (std::size_t i = 0; i < d; ++i) out(i, s) = merged[i];
      }
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

/// Jacobian of the constraint system Upsilon at the point xhat; rows are
/// constraint gradients, columns the d*m entries of xhat (row-major).
Mat constraint_jacobian(NormMethod method, const Mat& xhat, std::size_t g) {
  const std::size_t d = xhat.rows();
  const std::size_t m = xhat.cols();
  const std::size_t nvar = d * m;
  const auto var = [m](std::size_t i, std::size_t j) { return i * m + j; };

  std::vector<std::vector<double>> rows;
  const auto add_row = [&rows, nvar]() -> std::vector<double>& {
    rows.emplace_back(nvar, 0.0);
    return rows.back();
  };

  switch (method) {
    case NormMethod::BN:
      for (std::size_t i = 0; i < d; ++i) {
        auto& rc = add_row();
        for (std::size_t j = 0; j < m; ++j) rc[var(i, j)] = 1.0;
        auto& rv = add_row();
        for (std::size_t j = 0; j < m; ++j) rv[var(i, j)] = 2.0 * xhat(i, j);
      }
      break;
    case NormMethod::BW:
      for (std::size_t i = 0; i < d; ++i) {
        auto& rc = add_row();
        for (std::size_t j = 0; j < m; ++j) rc[var(i, j)] = 1.0;
      }
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
          auto& rw = add_row();
          for (std::size_t k = 0; k < m; ++k) {
            rw[var(i, k)] += xhat(j, k);
            rw[var(j, k)] += xhat(i, k);
          }
        }
      }
      break;
    case NormMethod::GN: {
      const std::size_t c = d / g;
      for (std::size_t s = 0; s < m; ++s) {
        for (std::size_t k = 0; k < g; ++k) {
          auto& rc = add_row();
          for (std::size_t t = 0; t < c; ++t) rc[var(k * c + t, s)] = 1.0;
          auto& rv = add_row();
          for (std::size_t t = 0; t < c; ++t) rv[var(k * c + t, s)] = 2.0 * xhat(k * c + t, s);
        }
      }
      break;
    }
    case NormMethod::GW: {
      const std::size_t c = d / g;
      for (std::size_t s = 0; s < m; ++s) {
        for (std::size_t k = 0; k < g; ++k) {
          auto& rc = add_row();
          for (std::size_t t = 0; t < c; ++t) rc[var(k * c + t, s)] = 1.0;
        }
        for (std::size_t k = 0; k < g; ++k) {
          for (std::size_t l = k; l < g; ++l) {
            auto& rw = add_row();
            for (std::size_t t = 0; t < c; ++t) {
              rw[var(k * c + t, s)] += xhat(l * c + t, s);
              rw[var(l * c + t, s)] += xhat(k * c + t, s);
            }
          }
        }
      }
      break;
    }
  }

  Mat j(rows.size(), nvar);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < nvar; ++k) j(i, k) = rows[i][k];
  return j;
}

}  // namespace

std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::BN: return "bn";
    case NormMethod::BW: return "bw";
    case NormMethod::GN: return "gn";
    case NormMethod::GW: return "gw";
  }
  return "?";
}

NormMethod norm_method_from_string(const std::string& s) {
  if (s == "bn" || s == "BN") return NormMethod::BN;
  if (s == "bw" || s == "BW") return NormMethod::BW;
  if (s == "gn" || s == "GN") return NormMethod::GN;
  if (s == "gw" || s == "GW") return NormMethod::GW;
  throw std::invalid_argument("unknown normalization method '" + s + "'");
}

ConstraintReport constraint_count(NormMethod method, std::size_t d, std::size_t m,
                                  std::size_t g, std::optional<long long> n_dataset) {
  if (d == 0 || m == 0) throw std::invalid_argument("constraint_count: d, m must be >= 1");
  check_group(method, d, g);
  const long long dl = static_cast<long long>(d);
  const long long ml = static_cast<long long>(m);
  const long long gl = static_cast<long long>(g);

  ConstraintReport r;
  r.method = method;
  r.d = d;
  r.m = m;
  r.g = g;
  r.chi = ml * dl;
  switch (method) {
    case NormMethod::BN: r.zeta_batch = 2 * dl; break;
    case NormMethod::BW: r.zeta_batch = dl * (dl + 3) / 2; break;
    case NormMethod::GN: r.zeta_batch = 2 * gl * ml; break;
    case NormMethod::GW: r.zeta_batch = ml * gl * (gl + 3) / 2; break;
  }
  r.feasible = r.zeta_batch <= r.chi;

  if (n_dataset.has_value()) {
    const long long n = *n_dataset;
    if (n <= 0) throw std::invalid_argument("constraint_count: N must be positive");
    switch (method) {
      case NormMethod::BN:
      case NormMethod::BW:
        if (n % ml != 0)
          throw std::invalid_argument("constraint_count: N must be divisible by m");
        r.zeta_dataset = method == NormMethod::BN ? 2 * n * dl / ml
                                                  : n / ml * (dl * (dl + 3) / 2);
        break;
      case NormMethod::GN: r.zeta_dataset = 2 * gl * n; break;
      case NormMethod::GW: r.zeta_dataset = n * gl * (gl + 3) / 2; break;
    }
  }
  return r;
}

FeasibilityBound feasibility_bound(NormMethod method, std::size_t d) {
  if (d == 0) throw std::invalid_argument("feasibility_bound: d must be >= 1");
  FeasibilityBound b;
  const double dd = static_cast<double>(d);
  switch (method) {
    case NormMethod::BN:
      b.description = "m >= 2";
      b.threshold = 2.0;
      b.bound_is_on_m = true;
      break;
    case NormMethod::BW:
      b.description = "m >= (d+3)/2";
      b.threshold = (dd + 3.0) / 2.0;
      b.bound_is_on_m = true;
      break;
    case NormMethod::GN:
      b.description = "g <= d/2";
      b.threshold = dd / 2.0;
      b.bound_is_on_m = false;
      break;
    case NormMethod::GW:
      b.description = "g <= (sqrt(8d+9)-3)/2";
      b.threshold = (std::sqrt(8.0 * dd + 9.0) - 3.0) / 2.0;
      b.bound_is_on_m = false;
      b.practical_threshold = std::sqrt(dd);
      break;
  }
  return b;
}

bool constraint_set_nonempty(NormMethod method, std::size_t d, std::size_t m, std::size_t g) {
  check_group(method, d, g);
  switch (method) {
    case NormMethod::BN: return m >= 2;
    case NormMethod::GN: return d / g >= 2;
    // Whitening pins down d (resp. g) orthogonal rows inside the
    // zero-sum hyperplane, which needs one spare dimension.
    case NormMethod::BW: return m >= d + 1;
    case NormMethod::GW: return d / g >= g + 1;
  }
  return false;
}

std::size_t constraint_rank_oracle(NormMethod method, std::size_t d, std::size_t m,
                                   std::size_t g, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("constraint_rank_oracle: trials must be >= 1");
  check_group(method, d, g);
  const ConstraintReport count = constraint_count(method, d, m, g);
  if (!count.feasible) {
    throw InfeasibleError("constraint_rank_oracle: zeta=" + std::to_string(count.zeta_batch) +
                          " exceeds chi=" + std::to_string(count.chi) +
                          " (" + feasibility_bound(method, d).description + ")");
  }
  if (!constraint_set_nonempty(method, d, m, g)) {
    throw InfeasibleError(
        "constraint_rank_oracle: the exact constraint set is empty for " + to_string(method) +
        " d=" + std::to_string(d) + " m=" + std::to_string(m) + " g=" + std::to_string(g) +
        " (whitening needs m >= d+1 / c >= g+1 on top of the counting bound)");
  }

  Rng rng(seed);
  std::size_t best = 0;
  for (int t = 0; t < trials; ++t) {
    const Mat xhat = feasible_point(method, d, m, g, rng);
    const Mat j = constraint_jacobian(method, xhat, g);
    best = std::max(best, rank_from_singular_values(singular_values_rows(j)));
  }
  return best;
}

}  // namespace normkit
