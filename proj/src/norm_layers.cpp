#include "normkit/norm_layers.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <set>
#include <stdexcept>

#include "normkit/eig.hpp"
#include "normkit/errors.hpp"

namespace normkit {

namespace {

std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler = [](const std::string& msg) {
    std::cerr << "[normkit] warning: " << msg << "\n";
  };
  return handler;
}

std::mutex warn_mutex;
std::set<std::string> warned_messages;

/// Largest divisor of d that is <= g (g >= 1).
std::size_t largest_divisor_leq(std::size_t d, std::size_t g) {
  for (std::size_t cand = std::min(g, d); cand >= 1; --cand)
    if (d % cand == 0) return cand;
  return 1;
}

double gw_group_bound(std::size_t d) {
  return (std::sqrt(8.0 * static_cast<double>(d) + 9.0) - 3.0) / 2.0;
}

Mat whiten_kernel(const Mat& sigma, const WhiteningConfig& cfg, EigenDecomp* zca,
                  ItnTrace* itn) {
  if (cfg.method == WhitenMethod::Zca) return zca_forward(sigma, zca);
  return itn_forward(sigma, cfg.iterations, itn);
}

Mat whiten_kernel_backward(const Mat& d_w, const WhiteningConfig& cfg,
                           const EigenDecomp& zca, const ItnTrace& itn) {
  if (cfg.method == WhitenMethod::Zca) return zca_backward(d_w, zca, cfg.eig_tie_tol);
  return itn_backward(d_w, itn);
}

}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
  std::lock_guard<std::mutex> lock(warn_mutex);
  warning_handler() = std::move(handler);
  warned_messages.clear();
}

// Serialized and de-duplicated: per-sample loops would otherwise repeat the
// same feasibility warning thousands of times from several threads.
void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(warn_mutex);
  if (!warned_messages.insert(message).second) return;
  if (warning_handler()) warning_handler()(message);
}

// ---------------------------------------------------------------------------
// Group division
// ---------------------------------------------------------------------------

GroupSpec GroupSpec::make(std::size_t d, std::size_t g) {
  if (d == 0 || g == 0) throw std::invalid_argument("GroupSpec: d and g must be positive");
  if (d % g != 0) {
    throw InfeasibleError("group count " + std::to_string(g) + " does not divide d=" +
                          std::to_string(d) + "; nearest valid group count is " +
                          std::to_string(largest_divisor_leq(d, g)));
  }
  return GroupSpec{d, g, d / g};
}

Mat group_divide(const std::vector<double>& x, const GroupSpec& spec) {
  if (x.size() != spec.d)
    throw std::invalid_argument("group_divide: expected length " + std::to_string(spec.d) +
                                ", got " + std::to_string(x.size()));
  Mat xg(spec.g, spec.c);
  std::copy(x.begin(), x.end(), xg.data());  // contiguous layout, pure reshape
  return xg;
}

std::vector<double> group_merge(const Mat& xg, const GroupSpec& spec) {
  if (xg.rows() != spec.g || xg.cols() != spec.c)
    throw std::invalid_argument("group_merge: shape mismatch");
  return xg.storage();
}

// ---------------------------------------------------------------------------
// Convolutional unrolling
// ---------------------------------------------------------------------------

Mat unroll_conv(const Tensor4& t, UnrollMode mode) {
  const auto [d, m, h, w] = t.shape;
  if (t.data.size() != t.shape.volume())
    throw std::invalid_argument("unroll_conv: tensor data does not match shape");
  if (mode == UnrollMode::BatchAxis) {
    Mat out(d, m * h * w);
    for (std::size_t di = 0; di < d; ++di)
      for (std::size_t mi = 0; mi < m; ++mi)
        for (std::size_t hi = 0; hi < h; ++hi)
          for (std::size_t wi = 0; wi < w; ++wi)
            out(di, (mi * h + hi) * w + wi) = t.at(di, mi, hi, wi);
    return out;
  }
  Mat out(d * h * w, m);
  for (std::size_t di = 0; di < d; ++di)
    for (std::size_t mi = 0; mi < m; ++mi)
      for (std::size_t hi = 0; hi < h; ++hi)
        for (std::size_t wi = 0; wi < w; ++wi)
          out((di * h + hi) * w + wi, mi) = t.at(di, mi, hi, wi);
  return out;
}

Tensor4 reroll_conv(const Mat& mtx, const ConvShape& shape, UnrollMode mode) {
  const auto [d, m, h, w] = shape;
  Tensor4 t(shape);
  if (mode == UnrollMode::BatchAxis) {
    if (mtx.rows() != d || mtx.cols() != m * h * w)
      throw std::invalid_argument("reroll_conv: matrix shape does not match BatchAxis unroll");
    for (std::size_t di = 0; di < d; ++di)
      for (std::size_t mi = 0; mi < m; ++mi)
        for (std::size_t hi = 0; hi < h; ++hi)
          for (std::size_t wi = 0; wi < w; ++wi)
            t.at(di, mi, hi, wi) = mtx(di, (mi * h + hi) * w + wi);
    return t;
  }
  if (mtx.rows() != d * h * w || mtx.cols() != m)
    throw std::invalid_argument("reroll_conv: matrix shape does not match ChannelAxis unroll");
  for (std::size_t di = 0; di < d; ++di)
    for (std::size_t mi = 0; mi < m; ++mi)
      for (std::size_t hi = 0; hi < h; ++hi)
        for (std::size_t wi = 0; wi < w; ++wi)
          t.at(di, mi, hi, wi) = mtx((di * h + hi) * w + wi, mi);
  return t;
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

Mat standardize_train(const Mat& x, StandardizeAxis axis, double eps, StandardizeCache* cache) {
  x.require_finite("standardize_train input");
  const bool row_mode = axis == StandardizeAxis::PerRowOverCols;
  const std::size_t slices = row_mode ? x.rows() : x.cols();
  const std::size_t len = row_mode ? x.cols() : x.rows();
  if (len < 2) {
    throw InfeasibleError(
        "standardize_train: reduced axis has length " + std::to_string(len) +
        "; the feasibility range requires m >= 2");
  }

  std::vector<double> mean(slices), inv_std(slices);
  Mat xhat(x.rows(), x.cols());
  for (std::size_t s = 0; s < slices; ++s) {
    double mu = 0.0;
    for (std::size_t k = 0; k < len; ++k) mu += row_mode ? x(s, k) : x(k, s);
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double v = (row_mode ? x(s, k) : x(k, s)) - mu;
      var += v * v;
    }
    var /= static_cast<double>(len);
    const double istd = 1.0 / std::sqrt(var + eps);
    mean[s] = mu;
    inv_std[s] = istd;
    for (std::size_t k = 0; k < len; ++k) {
      if (row_mode)
        xhat(s, k) = (x(s, k) - mu) * istd;
      else
        xhat(k, s) = (x(k, s) - mu) * istd;
    }
  }
  if (cache != nullptr) {
    cache->axis = axis;
    cache->xhat = xhat;
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
  }
  return xhat;
}

Mat standardize_backward(const Mat& d_xhat, const StandardizeCache& cache) {
  const Mat& xhat = cache.xhat;
  if (d_xhat.rows() != xhat.rows() || d_xhat.cols() != xhat.cols())
    throw std::invalid_argument("standardize_backward: gradient shape does not match cache");
  const bool row_mode = cache.axis == StandardizeAxis::PerRowOverCols;
  const std::size_t slices = row_mode ? xhat.rows() : xhat.cols();
  const std::size_t len = row_mode ? xhat.cols() : xhat.rows();

  Mat d_x(xhat.rows(), xhat.cols());
  for (std::size_t s = 0; s < slices; ++s) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double g = row_mode ? d_xhat(s, k) : d_xhat(k, s);
      const double xh = row_mode ? xhat(s, k) : xhat(k, s);
      sum_g += g;
      sum_gx += g * xh;
    }
    const double mean_g = sum_g / static_cast<double>(len);
    const double mean_gx = sum_gx / static_cast<double>(len);
    const double istd = cache.inv_std[s];
    for (std::size_t k = 0; k < len; ++k) {
      const double g = row_mode ? d_xhat(s, k) : d_xhat(k, s);
      const double xh = row_mode ? xhat(s, k) : xhat(k, s);
      const double v = istd * (g - mean_g - xh * mean_gx);
      if (row_mode)
        d_x(s, k) = v;
      else
        d_x(k, s) = v;
    }
  }
  return d_x;
}

// ---------------------------------------------------------------------------
// Batch whitening
// ---------------------------------------------------------------------------

Mat bw_forward_train(const Mat& x, const WhiteningConfig& cfg,
                     std::optional<std::size_t> group_channels, BwCache* cache) {
  cfg.validate();
  x.require_finite("bw_forward_train input");
  const std::size_t d = x.rows();
  const std::size_t m = x.cols();
  if (m < 2) throw InfeasibleError("bw_forward_train: batch size must be >= 2");
  const std::size_t blk = group_channels.value_or(d);
  if (blk == 0 || d % blk != 0)
    throw std::invalid_argument("bw_forward_train: group_channels must divide d");
  if (cfg.method == WhitenMethod::Zca &&
      static_cast<double>(m) < (static_cast<double>(blk) + 3.0) / 2.0) {
    warn("bw_forward_train: batch size m=" + std::to_string(m) +
         " below the feasibility range m >= (d+3)/2 = " +
         std::to_string((static_cast<double>(blk) + 3.0) / 2.0) + " for d=" +
         std::to_string(blk));
  }

  std::vector<double> mean(d);
  Mat xc(d, m);
  for (std::size_t i = 0; i < d; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < m; ++j) mu += x(i, j);
    mu /= static_cast<double>(m);
    mean[i] = mu;
    for (std::size_t j = 0; j < m; ++j) xc(i, j) = x(i, j) - mu;
  }

  Mat xhat(d, m);
  std::vector<BwBlockCache> blocks;
  for (std::size_t b = 0; b < d / blk; ++b) {
    Mat xcb(blk, m);
    for (std::size_t i = 0; i < blk; ++i)
      for (std::size_t j = 0; j < m; ++j) xcb(i, j) = xc(b * blk + i, j);
    const Mat sigma = covariance(xcb, m, cfg.eps);
    BwBlockCache bc;
    bc.w = whiten_kernel(sigma, cfg, &bc.zca, &bc.itn);
    const Mat xhb = matmul(bc.w, xcb);
    for (std::size_t i = 0; i < blk; ++i)
      for (std::size_t j = 0; j < m; ++j) xhat(b * blk + i, j) = xhb(i, j);
    bc.xc = std::move(xcb);
    blocks.push_back(std::move(bc));
  }
  if (cache != nullptr) {
    cache->cfg = cfg;
    cache->block_channels = blk;
    cache->m = m;
    cache->mean = std::move(mean);
    cache->blocks = std::move(blocks);
  }
  return xhat;
}

Mat bw_backward(const Mat& d_xhat, const BwCache& cache) {
  const std::size_t blk = cache.block_channels;
  const std::size_t m = cache.m;
  const std::size_t d = blk * cache.blocks.size();
  if (d_xhat.rows() != d || d_xhat.cols() != m)
    throw std::invalid_argument("bw_backward: gradient shape does not match cache");

  Mat d_x(d, m);
  for (std::size_t b = 0; b < cache.blocks.size(); ++b) {
    const BwBlockCache& bc = cache.blocks[b];
    Mat g(blk, m);
    for (std::size_t i = 0; i < blk; ++i)
      for (std::size_t j = 0; j < m; ++j) g(i, j) = d_xhat(b * blk + i, j);

    // Gradient chain of Algorithm 2 with the batch as the sample axis.
    const Mat d_w = matmul_nt(g, bc.xc);
    const Mat d_sigma = whiten_kernel_backward(d_w, cache.cfg, bc.zca, bc.itn);
    Mat g_centered = g;
    for (std::size_t i = 0; i < blk; ++i) {
      double f = 0.0;
      for (std::size_t j = 0; j < m; ++j) f += g(i, j);
      f /= static_cast<double>(m);
      for (std::size_t j = 0; j < m; ++j) g_centered(i, j) -= f;
    }
    Mat d_xb = matmul(bc.w, g_centered);
    const Mat sym = d_sigma + d_sigma.transposed();
    d_xb += matmul(sym, bc.xc) * (1.0 / static_cast<double>(m));
    for (std::size_t i = 0; i < blk; ++i)
      for (std::size_t j = 0; j < m; ++j) d_x(b * blk + i, j) = d_xb(i, j);
  }
  if (!d_x.all_finite()) throw NumericError("bw_backward: non-finite gradient");
  return d_x;
}

// ---------------------------------------------------------------------------
// Group whitening
// ---------------------------------------------------------------------------

std::vector<double> gw_forward(const std::vector<double>& x, const GroupSpec& spec,
                               const WhiteningConfig& cfg, GwCache* cache, GwRoute route) {
  cfg.validate();
  if (x.size() != spec.d)
    throw std::invalid_argument("gw_forward: input length does not match spec");
  const std::size_t g = spec.g;
  const std::size_t c = spec.c;
  if (c == 1)
    warn("gw_forward: c=1 estimates each group covariance from a single value");
  if (static_cast<double>(g) > gw_group_bound(spec.d)) {
    warn("gw_forward: group count g=" + std::to_string(g) +
         " exceeds the feasibility range g <= (sqrt(8d+9)-3)/2 = " +
         std::to_string(gw_group_bound(spec.d)) + " for d=" + std::to_string(spec.d));
  }

  Mat xg = group_divide(x, spec);
  Mat xc(g, c);
  for (std::size_t i = 0; i < g; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xg(i, j);
    mu /= static_cast<double>(c);
    for (std::size_t j = 0; j < c; ++j) xc(i, j) = xg(i, j) - mu;
  }

  const bool gram = route == GwRoute::Gram || (route == GwRoute::Auto && c < g);
  Mat xhat_g;
  GwCache local;
  GwCache& cc = cache != nullptr ? *cache : local;
  cc.spec = spec;
  cc.cfg = cfg;
  cc.gram = gram;
  if (gram) {
    // Right-multiplier form: Xc * psi((1/c) Xc^T Xc + eps I). Same output
    // as the primary route for any polynomial/spectral psi.
    const Mat gramm = covariance(xc.transposed(), c, cfg.eps);
    if (cfg.method == WhitenMethod::Zca) {
      cc.w = zca_forward(gramm, &cc.zca);
    } else {
      const double trace_g =
          gramm.trace() + (static_cast<double>(g) - static_cast<double>(c)) * cfg.eps;
      cc.w = itn_forward_traced(gramm, cfg.iterations, trace_g, &cc.itn);
    }
    xhat_g = matmul(xc, cc.w);
  } else {
    const Mat sigma = covariance(xc, c, cfg.eps);
    cc.w = whiten_kernel(sigma, cfg, &cc.zca, &cc.itn);
    xhat_g = matmul(cc.w, xc);
  }
  cc.xc = std::move(xc);
  return group_merge(xhat_g, spec);
}

std::vector<double> gw_backward(const std::vector<double>& d_xhat, const GwCache& cache) {
  const GroupSpec& spec = cache.spec;
  if (d_xhat.size() != spec.d)
    throw std::invalid_argument("gw_backward: gradient length does not match cache");
  const std::size_t g = spec.g;
  const std::size_t c = spec.c;
  const double cd = static_cast<double>(c);

  const Mat gmat = group_divide(d_xhat, spec);
  Mat d_xg;
  if (cache.gram) {
    // Xhat = Xc * M with M = psi(G), G = (1/c) Xc^T Xc + eps I.
    const Mat d_m = matmul_tn(cache.xc, gmat);
    const Mat d_g = whiten_kernel_backward(d_m, cache.cfg, cache.zca, cache.itn);
    Mat d_xc = matmul_nt(gmat, cache.w);
    d_xc += matmul(cache.xc, d_g + d_g.transposed()) * (1.0 / cd);
    d_xg = d_xc;
    for (std::size_t i = 0; i < g; ++i) {
      double mu = 0.0;
      for (std::size_t j = 0; j < c; ++j) mu += d_xc(i, j);
      mu /= cd;
      for (std::size_t j = 0; j < c; ++j) d_xg(i, j) -= mu;
    }
  } else {
    const Mat d_w = matmul_nt(gmat, cache.xc);
    const Mat d_sigma = whiten_kernel_backward(d_w, cache.cfg, cache.zca, cache.itn);
    Mat g_centered = gmat;
    for (std::size_t i = 0; i < g; ++i) {
      double f = 0.0;
      for (std::size_t j = 0; j < c; ++j) f += gmat(i, j);
      f /= cd;
      for (std::size_t j = 0; j < c; ++j) g_centered(i, j) -= f;
    }
    d_xg = matmul(cache.w, g_centered);
    d_xg += matmul(d_sigma + d_sigma.transposed(), cache.xc) * (1.0 / cd);
  }
  if (!d_xg.all_finite()) throw NumericError("gw_backward: non-finite gradient");
  return group_merge(d_xg, spec);
}

// ---------------------------------------------------------------------------
// Running statistics, inference, affine
// ---------------------------------------------------------------------------

LayerState LayerState::make(std::size_t d, double momentum) {
  LayerState s;
  s.d = d;
  s.gamma.assign(d, 1.0);
  s.beta.assign(d, 0.0);
  s.running_mean.assign(d, 0.0);
  s.momentum = momentum;
  return s;
}

LayerState update_running(LayerState state, const std::vector<double>& batch_mean,
                          const Mat& batch_whitener, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("update_running: lambda must lie in (0, 1]");
  if (batch_mean.size() != state.d)
    throw std::invalid_argument("update_running: mean length does not match state");
  if (state.update_count == 0 || state.running_whitener.empty()) {
    // First update seeds the running stats; later updates blend.
    state.running_mean = batch_mean;
    state.running_whitener = batch_whitener;
  } else {
    if (batch_whitener.rows() != state.running_whitener.rows() ||
        batch_whitener.cols() != state.running_whitener.cols())
      throw std::invalid_argument("update_running: whitener shape does not match state");
    for (std::size_t i = 0; i < state.d; ++i)
      state.running_mean[i] = (1.0 - lambda) * state.running_mean[i] + lambda * batch_mean[i];
    for (std::size_t i = 0; i < state.running_whitener.size(); ++i)
      state.running_whitener.data()[i] = (1.0 - lambda) * state.running_whitener.data()[i] +
                                         lambda * batch_whitener.data()[i];
  }
  state.update_count += 1;
  return state;
}

Mat bn_eval(const Mat& x, const LayerState& state) {
  if (state.update_count == 0)
    throw std::invalid_argument("bn_eval: running statistics were never updated");
  if (x.rows() != state.d) throw std::invalid_argument("bn_eval: channel count mismatch");
  if (state.running_whitener.rows() != state.d || state.running_whitener.cols() != 1)
    throw std::invalid_argument("bn_eval: state does not hold a per-channel inverse std");
  Mat out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double mu = state.running_mean[i];
    const double istd = state.running_whitener(i, 0);
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mu) * istd;
  }
  return out;
}

Mat bw_eval(const Mat& x, const LayerState& state) {
  if (state.update_count == 0)
    throw std::invalid_argument("bw_eval: running statistics were never updated");
  if (x.rows() != state.d) throw std::invalid_argument("bw_eval: channel count mismatch");
  if (state.running_whitener.rows() != state.d || state.running_whitener.cols() != state.d)
    throw std::invalid_argument("bw_eval: state does not hold a d x d matrix");

  Mat xc(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) xc(i, j) = x(i, j) - state.running_mean[i];

  if (state.bw_stat_mode == BwStatMode::Whitener) return matmul(state.running_whitener, xc);

  // BW_Sigma: the state tracks the covariance; whiten it at eval time,
  // block by block.
  const std::size_t blk = state.bw_block_channels == 0 ? state.d : state.bw_block_channels;
  Mat out(x.rows(), x.cols());
  for (std::size_t b = 0; b < state.d / blk; ++b) {
    Mat sig(blk, blk);
    for (std::size_t i = 0; i < blk; ++i)
      for (std::size_t j = 0; j < blk; ++j) sig(i, j) = state.running_whitener(b * blk + i, b * blk + j);
    const Mat w = whiten_kernel(symmetrized(sig), state.bw_cfg, nullptr, nullptr);
    for (std::size_t i = 0; i < blk; ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < blk; ++k) s += w(i, k) * xc(b * blk + k, j);
        out(b * blk + i, j) = s;
      }
    }
  }
  return out;
}

Mat affine_forward(const Mat& xhat, const std::vector<double>& gamma,
                   const std::vector<double>& beta, AffineCache* cache) {
  if (gamma.size() != xhat.rows() || beta.size() != xhat.rows())
    throw std::invalid_argument("affine_forward: parameter length does not match channels");
  Mat y(xhat.rows(), xhat.cols());
  for (std::size_t i = 0; i < xhat.rows(); ++i)
    for (std::size_t j = 0; j < xhat.cols(); ++j) y(i, j) = gamma[i] * xhat(i, j) + beta[i];
  if (cache != nullptr) {
    cache->xhat = xhat;
    cache->gamma = gamma;
  }
  return y;
}

AffineGrads affine_backward(const Mat& d_y, const AffineCache& cache) {
  const Mat& xhat = cache.xhat;
  if (d_y.rows() != xhat.rows() || d_y.cols() != xhat.cols())
    throw std::invalid_argument("affine_backward: gradient shape does not match cache");
  AffineGrads out;
  out.d_xhat = Mat(d_y.rows(), d_y.cols());
  out.d_gamma.assign(d_y.rows(), 0.0);
  out.d_beta.assign(d_y.rows(), 0.0);
  for (std::size_t i = 0; i < d_y.rows(); ++i) {
    for (std::size_t j = 0; j < d_y.cols(); ++j) {
      out.d_xhat(i, j) = cache.gamma[i] * d_y(i, j);
      out.d_gamma[i] += d_y(i, j) * xhat(i, j);
      out.d_beta[i] += d_y(i, j);
    }
  }
  return out;
}

}  // namespace normkit
