// normkit command-line front end: every analysis instrument as a
// subcommand emitting CSV/JSON.
//
// Exit codes: 0 success, 1 usage error, 2 infeasible configuration,
// 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "normkit/constraints.hpp"
#include "normkit/csv.hpp"
#include "normkit/dataset.hpp"
#include "normkit/eig.hpp"
#include "normkit/errors.hpp"
#include "normkit/harness.hpp"
#include "normkit/metrics.hpp"
#include "normkit/mlp.hpp"
#include "normkit/norm_layers.hpp"
#include "normkit/rng.hpp"
#include "normkit/whitening.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace normkit;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumeric = 3;

struct CommonFlags {
  std::string out;
  std::string format = "csv";
};

void emit(const Table& table, const CommonFlags& common) {
  if (common.out.empty()) {
    std::cout << (common.format == "json" ? table.to_json() : table.to_csv());
  } else {
    table.write_file(common.out, common.format);
  }
}

std::uint64_t g_seed_flag = 0;
bool g_seed_given = false;

void add_common(CLI::App* cmd, CommonFlags& common) {
  cmd->add_option("--out", common.out, "Output path (default: stdout)");
  cmd->add_option("--format", common.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", g_seed_flag, "seed (falls back to NORMKIT_SEED, then 12345)")
      ->each([](const std::string&) { g_seed_given = true; });
}

/// Features from a CSV file (one sample per row) into a d x n matrix.
Mat load_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric && rows.empty()) continue;  // header row
    if (!numeric) throw std::runtime_error("non-numeric cell in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no data rows in " + path);
  const std::size_t d = rows[0].size();
  Mat x(d, rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != d) throw std::runtime_error("ragged rows in " + path);
    for (std::size_t i = 0; i < d; ++i) x(i, j) = rows[j][i];
  }
  return x;
}

Mat normalize_features(const Mat& x, const std::string& method, std::size_t g, double eps,
                       WhitenMethod wm, int iterations) {
  if (method == "none") return x;
  if (method == "bn")
    return standardize_train(x, StandardizeAxis::PerRowOverCols, eps);
  if (method == "ln")
    return standardize_train(x, StandardizeAxis::PerColOverRows, eps);

  const GroupSpec spec = GroupSpec::make(x.rows(), g);
  WhiteningConfig cfg;
  cfg.eps = eps;
  cfg.method = wm;
  cfg.iterations = iterations;
  Mat out(x.rows(), x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::vector<double> col(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, j);
    std::vector<double> merged;
    if (method == "gn") {
      merged = group_merge(
          standardize_train(group_divide(col, spec), StandardizeAxis::PerRowOverCols, eps), spec);
    } else if (method == "gw") {
      merged = gw_forward(col, spec, cfg);
    } else {
      throw CLI::ValidationError("--normalize", "unknown method " + method);
    }
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = merged[i];
  }
  return out;
}

// --- whiten-check -----------------------------------------------------------

int cmd_whiten_check(std::size_t d, std::size_t g, const std::string& method, int iterations,
                     double eps, int trials, std::uint64_t seed, double tol_centering,
                     double tol_identity, const CommonFlags& common) {
  const FeasibilityBound bound = feasibility_bound(NormMethod::GW, d);
  if (static_cast<double>(g) > bound.threshold) {
    throw InfeasibleError("g=" + std::to_string(g) + " infeasible for d=" + std::to_string(d) +
                          ": requires " + bound.description + " (g <= " +
                          format_double(bound.threshold) + ")");
  }
  const GroupSpec spec = GroupSpec::make(d, g);
  WhiteningConfig cfg;
  cfg.method = method == "itn" ? WhitenMethod::Itn : WhitenMethod::Zca;
  cfg.iterations = iterations;
  cfg.eps = eps;

  Rng rng(seed);
  double worst_centering = 0.0, worst_identity = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x(d);
    for (double& v : x) v = rng.normal();
    GwCache cache;
    const std::vector<double> xhat = gw_forward(x, spec, cfg, &cache);
    const Mat grouped = group_divide(xhat, spec);
    for (std::size_t i = 0; i < spec.g; ++i) {
      double rowsum = 0.0;
      for (std::size_t j = 0; j < spec.c; ++j) rowsum += grouped(i, j);
      worst_centering = std::max(worst_centering, std::fabs(rowsum));
    }
    const Mat gram = covariance(grouped, spec.c, 0.0);
    worst_identity = std::max(worst_identity, max_abs_diff(gram, Mat::identity(spec.g)));
  }

  Table table({"d", "g", "method", "trials", "max_centering_violation",
               "max_identity_violation", "tol_centering", "tol_identity", "pass"});
  const bool pass = worst_centering < tol_centering && worst_identity < tol_identity;
  table.add_row({static_cast<long long>(d), static_cast<long long>(g), method,
                 static_cast<long long>(trials), worst_centering, worst_identity, tol_centering,
                 tol_identity, std::string(pass ? "yes" : "no")});
  emit(table, common);
  if (!pass) {
    std::cerr << "whiten-check: constraint violation above tolerance (centering "
              << format_double(worst_centering) << ", identity "
              << format_double(worst_identity) << ")\n";
    return kExitNumeric;
  }
  return kExitOk;
}

// --- grad-check -------------------------------------------------------------

struct GradCheckResult {
  double max_rel_err = 0.0;
  bool nan_in_grad = false;
};

/// Central finite differences against the analytic backward of one layer
/// configuration, using a fixed random upstream gradient.
GradCheckResult grad_check_layer(const std::string& layer, WhitenMethod wm, std::size_t d,
                                 std::size_t m, std::size_t g, int iterations,
                                 std::uint64_t seed, double eps) {
  Rng rng(seed);
  const Mat x = rng.normal_mat(d, m);
  const Mat upstream = rng.normal_mat(d, m);
  WhiteningConfig cfg;
  cfg.method = wm;
  cfg.iterations = iterations;
  cfg.eps = eps;

  const auto forward = [&](const Mat& input) -> Mat {
    if (layer == "bn") return standardize_train(input, StandardizeAxis::PerRowOverCols, eps);
    if (layer == "ln") return standardize_train(input, StandardizeAxis::PerColOverRows, eps);
    if (layer == "bw") {
      BwCache cache;
      return bw_forward_train(input, cfg, std::nullopt, &cache);
    }
    const GroupSpec spec = GroupSpec::make(d, g);
    Mat out(d, input.cols());
    for (std::size_t j = 0; j < input.cols(); ++j) {
      std::vector<double> col(d);
      for (std::size_t i = 0; i < d; ++i) col[i] = input(i, j);
      std::vector<double> merged;
      if (layer == "gn") {
        merged = group_merge(
            standardize_train(group_divide(col, spec), StandardizeAxis::PerRowOverCols, eps),
            spec);
      } else {
        merged = gw_forward(col, spec, cfg);
      }
      for (std::size_t i = 0; i < d; ++i) out(i, j) = merged[i];
    }
    return out;
  };

  // analytic gradient
  Mat analytic;
  if (layer == "bn" || layer == "ln") {
    StandardizeCache cache;
    standardize_train(x, layer == "bn" ? StandardizeAxis::PerRowOverCols
                                       : StandardizeAxis::PerColOverRows, eps, &cache);
    analytic = standardize_backward(upstream, cache);
  } else if (layer == "bw") {
    BwCache cache;
    bw_forward_train(x, cfg, std::nullopt, &cache);
    analytic = bw_backward(upstream, cache);
  } else if (layer == "gn") {
    const GroupSpec spec = GroupSpec::make(d, g);
    analytic = Mat(d, m);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> col(d), up(d);
      for (std::size_t i = 0; i < d; ++i) {
        col[i] = x(i, j);
        up[i] = upstream(i, j);
      }
      StandardizeCache cache;
      standardize_train(group_divide(col, spec), StandardizeAxis::PerRowOverCols, eps, &cache);
      const std::vector<double> grad =
          group_merge(standardize_backward(group_divide(up, spec), cache), spec);
      for (std::size_t i = 0; i < d; ++i) analytic(i, j) = grad[i];
    }
  } else if (layer == "gw") {
    const GroupSpec spec = GroupSpec::make(d, g);
    analytic = Mat(d, m);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> col(d), up(d);
      for (std::size_t i = 0; i < d; ++i) {
        col[i] = x(i, j);
        up[i] = upstream(i, j);
      }
      GwCache cache;
      gw_forward(col, spec, cfg, &cache);
      const std::vector<double> grad = gw_backward(up, cache);
      for (std::size_t i = 0; i < d; ++i) analytic(i, j) = grad[i];
    }
  } else {
    throw CLI::ValidationError("--layer", "unknown layer " + layer);
  }

  GradCheckResult res;
  if (!analytic.all_finite()) {
    res.nan_in_grad = true;
    return res;
  }

  const double h = 1e-5;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      Mat xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      const double fd = (dot(upstream, forward(xp)) - dot(upstream, forward(xm))) / (2.0 * h);
      const double an = analytic(i, j);
      if (std::fabs(an) <= 1e-8 && std::fabs(fd) <= 1e-8) continue;
      const double rel = std::fabs(an - fd) / std::max(std::fabs(an), std::fabs(fd));
      res.max_rel_err = std::max(res.max_rel_err, rel);
    }
  }
  return res;
}

int cmd_grad_check(const std::string& layer, const std::string& method, std::size_t d,
                   std::size_t m, std::size_t g, int iterations, int seeds, double eps,
                   double tol, std::uint64_t seed0, const CommonFlags& common) {
  Table table({"layer", "method", "d", "m", "g", "seed", "max_rel_err", "pass"});
  bool all_pass = true;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(s);
    const GradCheckResult res = grad_check_layer(
        layer, method == "itn" ? WhitenMethod::Itn : WhitenMethod::Zca, d, m, g, iterations,
        seed, eps);
    if (res.nan_in_grad) {
      std::cerr << "grad-check: NaN in analytic gradient\n";
      return kExitNumeric;
    }
    const bool pass = res.max_rel_err < tol;
    all_pass = all_pass && pass;
    table.add_row({layer, method, static_cast<long long>(d), static_cast<long long>(m),
                   static_cast<long long>(g), static_cast<long long>(seed), res.max_rel_err,
                   std::string(pass ? "yes" : "no")});
  }
  emit(table, common);
  return all_pass ? kExitOk : kExitNumeric;
}

// --- constraints ------------------------------------------------------------

int cmd_constraints(const std::string& method, std::size_t d, std::size_t m, std::size_t g,
                    std::optional<long long> n_dataset, bool certify, int trials,
                    std::uint64_t seed, const CommonFlags& common) {
  const NormMethod nm = norm_method_from_string(method);
  const ConstraintReport rep = constraint_count(nm, d, m, g, n_dataset);
  const FeasibilityBound bound = feasibility_bound(nm, d);

  Table table({"method", "d", "m", "g", "zeta_batch", "zeta_dataset", "chi", "feasible",
               "bound", "rank_oracle"});
  std::string rank = "";
  if (certify) {
    rank = std::to_string(constraint_rank_oracle(nm, d, m, g, trials, seed));
  }
  table.add_row({method, static_cast<long long>(d), static_cast<long long>(m),
                 static_cast<long long>(g), rep.zeta_batch,
                 rep.zeta_dataset ? std::to_string(*rep.zeta_dataset) : std::string(""),
                 rep.chi, std::string(rep.feasible ? "yes" : "no"), bound.description, rank});
  emit(table, common);
  if (certify && rank != std::to_string(rep.zeta_batch)) {
    std::cerr << "constraints: rank oracle " << rank << " != closed form " << rep.zeta_batch
              << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

// --- conditioning -----------------------------------------------------------

int cmd_conditioning(const std::string& input, std::size_t d, std::size_t n, int depth,
                     double p, const std::string& normalize, const std::string& glist,
                     double eps, const std::string& method, int iterations, int seeds,
                     std::uint64_t seed0, const CommonFlags& common) {
  Table table({"p", "normalize", "g", "seed", "kappa_p", "degenerate"});
  std::vector<std::size_t> gs;
  for (const std::string& tok : [&glist] {
         std::vector<std::string> out;
         std::stringstream ss(glist);
         std::string t;
         while (std::getline(ss, t, ',')) out.push_back(t);
         return out;
       }())
    gs.push_back(std::stoul(tok));
  if (gs.empty()) gs.push_back(1);

  const WhitenMethod wm = method == "itn" ? WhitenMethod::Itn : WhitenMethod::Zca;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(s);
    const Mat features =
        input.empty() ? gen_gaussian_features(d, n, depth, seed) : load_features_csv(input);
    for (std::size_t g : gs) {
      const Mat normed = normalize_features(features, normalize, g, eps, wm, iterations);
      const ConditioningReport rep = condition_number_p(normed, p);
      table.add_row({p, normalize, static_cast<long long>(g), static_cast<long long>(seed),
                     rep.kappa_p, std::string(rep.degenerate ? "yes" : "no")});
    }
    if (!input.empty()) break;  // file input: nothing varies across seeds
  }
  emit(table, common);
  return kExitOk;
}

// --- diversity ---------------------------------------------------------------

int cmd_diversity(const std::string& input, std::size_t d, std::size_t n, int depth,
                  int bins, int pairs, const std::string& normalize, const std::string& clist,
                  double eps, std::uint64_t seed, const CommonFlags& common) {
  Table table({"normalize", "c", "g", "bins", "pairs", "seed", "gamma"});
  std::vector<std::size_t> cs;
  {
    std::stringstream ss(clist);
    std::string t;
    while (std::getline(ss, t, ',')) cs.push_back(std::stoul(t));
  }
  const Mat features =
      input.empty() ? gen_gaussian_features(d, n, depth, seed) : load_features_csv(input);
  if (cs.empty() || normalize == "none") {
    const DiversityReport rep = diversity(features, bins, pairs, seed);
    table.add_row({std::string("none"), 0LL, 0LL, static_cast<long long>(bins),
                   static_cast<long long>(rep.pair_count), static_cast<long long>(seed),
                   rep.gamma});
  } else {
    for (std::size_t c : cs) {
      if (features.rows() % c != 0)
        throw InfeasibleError("c=" + std::to_string(c) + " does not divide d=" +
                              std::to_string(features.rows()));
      const std::size_t g = features.rows() / c;
      const Mat normed =
          normalize_features(features, normalize, g, eps, WhitenMethod::Zca, 5);
      const DiversityReport rep = diversity(normed, bins, pairs, seed);
      table.add_row({normalize, static_cast<long long>(c), static_cast<long long>(g),
                     static_cast<long long>(bins), static_cast<long long>(rep.pair_count),
                     static_cast<long long>(seed), rep.gamma});
    }
  }
  emit(table, common);
  return kExitOk;
}

// --- histogram ---------------------------------------------------------------

int cmd_histogram(const std::string& input, std::size_t d, std::size_t n, int depth,
                  std::size_t dim_x, std::size_t dim_y, int bins, const std::string& normalize,
                  std::size_t g, double eps, std::uint64_t seed, const CommonFlags& common) {
  const Mat features =
      input.empty() ? gen_gaussian_features(d, n, depth, seed) : load_features_csv(input);
  const Mat normed = normalize_features(features, normalize, g, eps, WhitenMethod::Zca, 5);
  const Histogram2D h = bivariate_histogram(normed, {dim_x, dim_y}, bins);

  // Dense grid with a leading header row of bin edges.
  std::vector<std::string> header = {"edge_or_row"};
  for (int b = 0; b < bins; ++b) header.push_back("bin_" + std::to_string(b));
  Table table(header);
  std::vector<Cell> edges = {std::string("edges_y_low")};
  for (int b = 0; b < bins; ++b) edges.push_back(h.edges_y[static_cast<std::size_t>(b)]);
  table.add_row(edges);
  for (int i = 0; i < bins; ++i) {
    std::vector<Cell> row = {format_double(h.edges_x[static_cast<std::size_t>(i)])};
    for (int j = 0; j < bins; ++j) row.push_back(h.at(i, j));
    table.add_row(row);
  }
  emit(table, common);
  return kExitOk;
}

// --- sweep / fit-random-labels ----------------------------------------------

int cmd_sweep(const std::string& config_path, bool random_labels, bool reduce_best, int jobs,
              const CommonFlags& common) {
  SweepConfig sc = sweep_from_config(parse_config_file(config_path));
  if (random_labels) sc.base.dataset.random_labels = true;
  const Table long_format = sweep(sc.base, sc.cells, jobs);
  if (reduce_best) {
    emit(best_over_lr(long_format), common);
  } else {
    emit(long_format, common);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normkit: normalization and whitening analysis toolkit"};
  app.require_subcommand(1);

  // whiten-check
  auto* wc = app.add_subcommand("whiten-check", "Grouped-output whitening constraint checks");
  std::size_t wc_d = 16, wc_g = 4;
  std::string wc_method = "zca";
  int wc_t = 5, wc_trials = 100;
  double wc_eps = 1e-9, wc_tol_center = 1e-8, wc_tol_identity = 1e-6;
  bool wc_tol_identity_set = false;
  CommonFlags wc_common;
  wc->add_option("--d", wc_d, "channels")->required();
  wc->add_option("--g", wc_g, "group count")->required();
  wc->add_option("--method", wc_method)->check(CLI::IsMember({"zca", "itn"}));
  wc->add_option("--T", wc_t, "ItN iterations");
  wc->add_option("--eps", wc_eps);
  wc->add_option("--trials", wc_trials);
  wc->add_option("--tol-centering", wc_tol_center);
  wc->add_option("--tol-identity", wc_tol_identity)
      ->each([&wc_tol_identity_set](const std::string&) { wc_tol_identity_set = true; });
  add_common(wc, wc_common);

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "Finite-difference gradient certification");
  std::string gc_layer = "gw", gc_method = "zca";
  std::size_t gc_d = 16, gc_m = 8, gc_g = 4;
  int gc_t = 5, gc_seeds = 5;
  double gc_eps = 1e-5, gc_tol = 1e-4;
  CommonFlags gc_common;
  gc->add_option("--layer", gc_layer)->check(CLI::IsMember({"bn", "ln", "gn", "bw", "gw"}));
  gc->add_option("--method", gc_method)->check(CLI::IsMember({"zca", "itn"}));
  gc->add_option("--d", gc_d);
  gc->add_option("--m", gc_m);
  gc->add_option("--g", gc_g);
  gc->add_option("--T", gc_t);
  gc->add_option("--seeds", gc_seeds);
  gc->add_option("--eps", gc_eps);
  gc->add_option("--tol", gc_tol);
  add_common(gc, gc_common);

  // constraints
  auto* cn = app.add_subcommand("constraints", "Constraint numbers and feasibility");
  std::string cn_method = "bn";
  std::size_t cn_d = 4, cn_m = 16, cn_g = 1;
  long long cn_n = -1;
  bool cn_certify = false;
  int cn_trials = 5;
  CommonFlags cn_common;
  cn->add_option("--method", cn_method)->check(CLI::IsMember({"bn", "bw", "gn", "gw"}));
  cn->add_option("--d", cn_d)->required();
  cn->add_option("--m", cn_m);
  cn->add_option("--g", cn_g);
  cn->add_option("--N", cn_n, "dataset size for zeta(phi;D)");
  cn->add_flag("--certify", cn_certify, "run the Jacobian rank oracle");
  cn->add_option("--trials", cn_trials);
  add_common(cn, cn_common);

  // conditioning
  auto* cd = app.add_subcommand("conditioning", "Percentile condition numbers");
  std::string cd_input, cd_normalize = "none", cd_glist = "1", cd_method = "zca";
  std::size_t cd_d = 256, cd_n = 1024;
  int cd_depth = 2, cd_iters = 5, cd_seeds = 1;
  double cd_p = 0.9, cd_eps = 1e-5;
  CommonFlags cd_common;
  cd->add_option("--input", cd_input, "features CSV (one sample per row)");
  cd->add_option("--d", cd_d);
  cd->add_option("--n", cd_n);
  cd->add_option("--depth", cd_depth, "generator MLP depth");
  cd->add_option("--p", cd_p);
  cd->add_option("--normalize", cd_normalize)
      ->check(CLI::IsMember({"none", "bn", "ln", "gn", "gw"}));
  cd->add_option("--g", cd_glist, "comma list of group counts");
  cd->add_option("--eps", cd_eps);
  cd->add_option("--method", cd_method)->check(CLI::IsMember({"zca", "itn"}));
  cd->add_option("--T", cd_iters);
  cd->add_option("--seeds", cd_seeds);
  add_common(cd, cd_common);

  // diversity
  auto* dv = app.add_subcommand("diversity", "Entropy-based feature diversity");
  std::string dv_input, dv_normalize = "gn", dv_clist = "2,4,8,16";
  std::size_t dv_d = 32, dv_n = 100000;
  int dv_depth = 0, dv_bins = 100, dv_pairs = 50;
  double dv_eps = 1e-5;
  CommonFlags dv_common;
  dv->add_option("--input", dv_input);
  dv->add_option("--d", dv_d);
  dv->add_option("--n", dv_n);
  dv->add_option("--depth", dv_depth);
  dv->add_option("--bins", dv_bins);
  dv->add_option("--pairs", dv_pairs);
  dv->add_option("--normalize", dv_normalize)->check(CLI::IsMember({"none", "gn", "gw"}));
  dv->add_option("--c", dv_clist, "comma list of channels-per-group");
  dv->add_option("--eps", dv_eps);
  add_common(dv, dv_common);

  // histogram
  auto* hg = app.add_subcommand("histogram", "Bivariate histogram grid");
  std::string hg_input, hg_normalize = "gn";
  std::size_t hg_d = 32, hg_n = 10000, hg_dimx = 0, hg_dimy = 1, hg_g = 16;
  int hg_depth = 0, hg_bins = 50;
  double hg_eps = 1e-5;
  CommonFlags hg_common;
  hg->add_option("--input", hg_input);
  hg->add_option("--d", hg_d);
  hg->add_option("--n", hg_n);
  hg->add_option("--depth", hg_depth);
  hg->add_option("--dim-x", hg_dimx);
  hg->add_option("--dim-y", hg_dimy);
  hg->add_option("--bins", hg_bins);
  hg->add_option("--normalize", hg_normalize)
      ->check(CLI::IsMember({"none", "bn", "ln", "gn", "gw"}));
  hg->add_option("--g", hg_g);
  hg->add_option("--eps", hg_eps);
  add_common(hg, hg_common);

  // sweep
  auto* sw = app.add_subcommand("sweep", "Training sweep from a config file");
  std::string sw_config;
  bool sw_best = false;
  int sw_jobs = 0;
  CommonFlags sw_common;
  sw->add_option("--config", sw_config)->required()->check(CLI::ExistingFile);
  sw->add_flag("--best", sw_best, "reduce to best-over-lr rows");
  sw->add_option("--jobs", sw_jobs, "parallel training jobs (0 = all cores)");
  add_common(sw, sw_common);

  // fit-random-labels
  auto* fr = app.add_subcommand("fit-random-labels",
                                "Random-label capacity probe (best over lr grid)");
  std::string fr_config;
  int fr_jobs = 0;
  bool fr_long = false;
  CommonFlags fr_common;
  fr->add_option("--config", fr_config)->required()->check(CLI::ExistingFile);
  fr->add_option("--jobs", fr_jobs);
  fr->add_flag("--long", fr_long, "emit the long-format table instead of the reduction");
  add_common(fr, fr_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::uint64_t seed = resolve_seed(g_seed_given ? &g_seed_flag : nullptr, 12345);

  try {
    if (wc->parsed()) {
      if (!wc_tol_identity_set && wc_method == "itn") wc_tol_identity = 5e-3;
      return cmd_whiten_check(wc_d, wc_g, wc_method, wc_t, wc_eps, wc_trials, seed,
                              wc_tol_center, wc_tol_identity, wc_common);
    }
    if (gc->parsed())
      return cmd_grad_check(gc_layer, gc_method, gc_d, gc_m, gc_g, gc_t, gc_seeds, gc_eps,
                            gc_tol, seed, gc_common);
    if (cn->parsed())
      return cmd_constraints(cn_method, cn_d, cn_m, cn_g,
                             cn_n >= 0 ? std::optional<long long>(cn_n) : std::nullopt,
                             cn_certify, cn_trials, seed, cn_common);
    if (cd->parsed())
      return cmd_conditioning(cd_input, cd_d, cd_n, cd_depth, cd_p, cd_normalize, cd_glist,
                              cd_eps, cd_method, cd_iters, cd_seeds, seed, cd_common);
    if (dv->parsed())
      return cmd_diversity(dv_input, dv_d, dv_n, dv_depth, dv_bins, dv_pairs, dv_normalize,
                           dv_clist, dv_eps, seed, dv_common);
    if (hg->parsed())
      return cmd_histogram(hg_input, hg_d, hg_n, hg_depth, hg_dimx, hg_dimy, hg_bins,
                           hg_normalize, hg_g, hg_eps, seed, hg_common);
    if (sw->parsed()) return cmd_sweep(sw_config, false, sw_best, sw_jobs, sw_common);
    if (fr->parsed()) return cmd_sweep(fr_config, true, !fr_long, fr_jobs, fr_common);
  } catch (const InfeasibleError& ex) {
    std::cerr << "infeasible configuration: " << ex.what() << "\n";
    return kExitInfeasible;
  } catch (const NumericError& ex) {
    std::cerr << "numerical failure: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
