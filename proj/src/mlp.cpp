#include "normkit/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "normkit/eig.hpp"
#include "normkit/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace normkit {

std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::None: return "none";
    case NormKind::BatchNorm: return "bn";
    case NormKind::LayerNorm: return "ln";
    case NormKind::GroupNorm: return "gn";
    case NormKind::BatchWhiten: return "bw";
    case NormKind::GroupWhiten: return "gw";
  }
  return "?";
}

NormKind norm_kind_from_string(const std::string& s) {
  if (s == "none") return NormKind::None;
  if (s == "bn") return NormKind::BatchNorm;
  if (s == "ln") return NormKind::LayerNorm;
  if (s == "gn") return NormKind::GroupNorm;
  if (s == "bw") return NormKind::BatchWhiten;
  if (s == "gw") return NormKind::GroupWhiten;
  throw std::invalid_argument("unknown norm kind '" + s + "'");
}

NormLayer::NormLayer(std::size_t width, const NormSetting& setting)
    : setting_(setting), width_(width), state_(LayerState::make(width, setting.momentum)) {
  state_.bw_stat_mode = setting.bw_stat_mode;
  state_.bw_cfg = setting.whiten;
  state_.bw_block_channels = setting.bw_block;
  if (setting.kind == NormKind::GroupNorm || setting.kind == NormKind::GroupWhiten)
    GroupSpec::make(width, setting.groups);  // validates divisibility up front
}

Mat NormLayer::forward_train(const Mat& pre) {
  const std::size_t m = pre.cols();
  Mat xhat;
  switch (setting_.kind) {
    case NormKind::None:
      xhat = pre;
      break;
    case NormKind::BatchNorm: {
      xhat = standardize_train(pre, StandardizeAxis::PerRowOverCols, setting_.whiten.eps,
                               &std_cache_);
      Mat istd(width_, 1);
      for (std::size_t i = 0; i < width_; ++i) istd(i, 0) = std_cache_.inv_std[i];
      state_ = update_running(std::move(state_), std_cache_.mean, istd, setting_.momentum);
      break;
    }
    case NormKind::LayerNorm:
      xhat = standardize_train(pre, StandardizeAxis::PerColOverRows, setting_.whiten.eps,
                               &std_cache_);
      break;
    case NormKind::GroupNorm: {
      const GroupSpec spec = GroupSpec::make(width_, setting_.groups);
      xhat = Mat(width_, m);
      gn_caches_.assign(m, StandardizeCache{});
      const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m > 8)
#endif
      for (std::ptrdiff_t j = 0; j < mm; ++j) {
        std::vector<double> col(width_);
        for (std::size_t i = 0; i < width_; ++i) col[i] = pre(i, static_cast<std::size_t>(j));
        const Mat grouped = group_divide(col, spec);
        const Mat normed = standardize_train(grouped, StandardizeAxis::PerRowOverCols,
                                             setting_.whiten.eps,
                                             &gn_caches_[static_cast<std::size_t>(j)]);
        const std::vector<double> merged = group_merge(normed, spec);
        for (std::size_t i = 0; i < width_; ++i) xhat(i, static_cast<std::size_t>(j)) = merged[i];
      }
      break;
    }
    case NormKind::BatchWhiten: {
      std::optional<std::size_t> blk;
      if (setting_.bw_block != 0) blk = setting_.bw_block;
      xhat = bw_forward_train(pre, setting_.whiten, blk, &bw_cache_);
      // Running statistic: the whitener itself, or the covariance in the
      // BW_Sigma variant.
      const std::size_t nblk = bw_cache_.blocks.size();
      const std::size_t bc = bw_cache_.block_channels;
      Mat stat(width_, width_);
      for (std::size_t b = 0; b < nblk; ++b) {
        const BwBlockCache& block = bw_cache_.blocks[b];
        const Mat source = state_.bw_stat_mode == BwStatMode::Whitener
                               ? block.w
                               : covariance(block.xc, m, setting_.whiten.eps);
        for (std::size_t i = 0; i < bc; ++i)
          for (std::size_t j = 0; j < bc; ++j) stat(b * bc + i, b * bc + j) = source(i, j);
      }
      state_ = update_running(std::move(state_), bw_cache_.mean, stat, setting_.momentum);
      break;
    }
    case NormKind::GroupWhiten: {
      const GroupSpec spec = GroupSpec::make(width_, setting_.groups);
      xhat = Mat(width_, m);
      gw_caches_.assign(m, GwCache{});
      const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m > 8)
#endif
      for (std::ptrdiff_t j = 0; j < mm; ++j) {
        std::vector<double> col(width_);
        for (std::size_t i = 0; i < width_; ++i) col[i] = pre(i, static_cast<std::size_t>(j));
        const std::vector<double> merged =
            gw_forward(col, spec, setting_.whiten, &gw_caches_[static_cast<std::size_t>(j)]);
        for (std::size_t i = 0; i < width_; ++i) xhat(i, static_cast<std::size_t>(j)) = merged[i];
      }
      break;
    }
  }
  return affine_forward(xhat, state_.gamma, state_.beta, &affine_cache_);
}

Mat NormLayer::forward_eval(const Mat& pre) const {
  Mat xhat;
  switch (setting_.kind) {
    case NormKind::None:
      xhat = pre;
      break;
    case NormKind::BatchNorm:
      xhat = bn_eval(pre, state_);
      break;
    case NormKind::BatchWhiten:
      xhat = bw_eval(pre, state_);
      break;
    case NormKind::LayerNorm:
      xhat = standardize_train(pre, StandardizeAxis::PerColOverRows, setting_.whiten.eps);
      break;
    case NormKind::GroupNorm:
    case NormKind::GroupWhiten: {
      const GroupSpec spec = GroupSpec::make(width_, setting_.groups);
      const std::size_t m = pre.cols();
      xhat = Mat(width_, m);
      for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> col(width_);
        for (std::size_t i = 0; i < width_; ++i) col[i] = pre(i, j);
        std::vector<double> merged;
        if (setting_.kind == NormKind::GroupNorm) {
          const Mat normed = standardize_train(group_divide(col, spec),
                                               StandardizeAxis::PerRowOverCols,
                                               setting_.whiten.eps);
          merged = group_merge(normed, spec);
        } else {
          merged = gw_forward(col, spec, setting_.whiten);
        }
        for (std::size_t i = 0; i < width_; ++i) xhat(i, j) = merged[i];
      }
      break;
    }
  }
  return affine_forward(xhat, state_.gamma, state_.beta, nullptr);
}

Mat NormLayer::backward(const Mat& d_out) {
  AffineGrads ag = affine_backward(d_out, affine_cache_);
  d_gamma_ = std::move(ag.d_gamma);
  d_beta_ = std::move(ag.d_beta);
  const Mat& d_xhat = ag.d_xhat;
  switch (setting_.kind) {
    case NormKind::None:
      return d_xhat;
    case NormKind::BatchNorm:
    case NormKind::LayerNorm:
      return standardize_backward(d_xhat, std_cache_);
    case NormKind::BatchWhiten:
      return bw_backward(d_xhat, bw_cache_);
    case NormKind::GroupNorm: {
      const GroupSpec spec = GroupSpec::make(width_, setting_.groups);
      const std::size_t m = d_xhat.cols();
      Mat d_pre(width_, m);
      const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m > 8)
#endif
      for (std::ptrdiff_t j = 0; j < mm; ++j) {
        std::vector<double> col(width_);
        for (std::size_t i = 0; i < width_; ++i) col[i] = d_xhat(i, static_cast<std::size_t>(j));
        const Mat g = group_divide(col, spec);
        const Mat d_g = standardize_backward(g, gn_caches_[static_cast<std::size_t>(j)]);
        const std::vector<double> merged = group_merge(d_g, spec);
        for (std::size_t i = 0; i < width_; ++i) d_pre(i, static_cast<std::size_t>(j)) = merged[i];
      }
      return d_pre;
    }
    case NormKind::GroupWhiten: {
      const std::size_t m = d_xhat.cols();
      Mat d_pre(width_, m);
      const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m > 8)
#endif
      for (std::ptrdiff_t j = 0; j < mm; ++j) {
        std::vector<double> col(width_);
        for (std::size_t i = 0; i < width_; ++i) col[i] = d_xhat(i, static_cast<std::size_t>(j));
        const std::vector<double> merged =
            gw_backward(col, gw_caches_[static_cast<std::size_t>(j)]);
        for (std::size_t i = 0; i < width_; ++i) d_pre(i, static_cast<std::size_t>(j)) = merged[i];
      }
      return d_pre;
    }
  }
  throw std::logic_error("unreachable");
}

void NormLayer::sgd_step(double lr) {
  if (setting_.kind == NormKind::None || d_gamma_.empty()) return;
  for (std::size_t i = 0; i < width_; ++i) {
    state_.gamma[i] -= lr * d_gamma_[i];
    state_.beta[i] -= lr * d_beta_[i];
  }
}

SoftmaxResult softmax_cross_entropy(const Mat& logits, const std::vector<int>& labels) {
  const std::size_t k = logits.rows();
  const std::size_t m = logits.cols();
  if (labels.size() != m)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  SoftmaxResult res;
  res.d_logits = Mat(k, m);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t j = 0; j < m; ++j) {
    double mx = logits(0, j);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (logits(i, j) > mx) {
        mx = logits(i, j);
        arg = i;
      }
    }
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) z += std::exp(logits(i, j) - mx);
    const int y = labels[j];
    loss -= (logits(static_cast<std::size_t>(y), j) - mx - std::log(z));
    if (arg == static_cast<std::size_t>(y)) ++correct;
    for (std::size_t i = 0; i < k; ++i) {
      double p = std::exp(logits(i, j) - mx) / z;
      if (i == static_cast<std::size_t>(y)) p -= 1.0;
      res.d_logits(i, j) = p / static_cast<double>(m);
    }
  }
  res.loss = loss / static_cast<double>(m);
  res.accuracy = static_cast<double>(correct) / static_cast<double>(m);
  return res;
}

Mlp::Mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden, int classes,
         const NormSetting& norm, std::uint64_t seed)
    : classes_(classes) {
  Rng rng(seed);
  std::size_t prev = input_dim;
  for (std::size_t width : hidden) {
    Linear lin;
    lin.w = rng.normal_mat(width, prev);
    lin.w *= std::sqrt(2.0 / static_cast<double>(prev));
    lin.b.assign(width, 0.0);
    linears_.push_back(std::move(lin));
    norms_.emplace_back(width, norm);
    prev = width;
  }
  Linear head;
  head.w = rng.normal_mat(static_cast<std::size_t>(classes), prev);
  head.w *= std::sqrt(2.0 / static_cast<double>(prev));
  head.b.assign(static_cast<std::size_t>(classes), 0.0);
  linears_.push_back(std::move(head));
}

Mat Mlp::linear_forward(Linear& lin, const Mat& x) {
  lin.x_in = x;
  Mat y = matmul(lin.w, x);
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += lin.b[i];
  return y;
}

Mat Mlp::linear_backward(Linear& lin, const Mat& d_out) {
  lin.d_w = matmul_nt(d_out, lin.x_in);
  lin.d_b.assign(d_out.rows(), 0.0);
  for (std::size_t i = 0; i < d_out.rows(); ++i)
    for (std::size_t j = 0; j < d_out.cols(); ++j) lin.d_b[i] += d_out(i, j);
  return matmul_tn(lin.w, d_out);
}

Mat Mlp::forward(const Mat& x, LayerMode mode) {
  Mat h = x;
  relu_masks_.assign(norms_.size(), Mat{});
  for (std::size_t l = 0; l < norms_.size(); ++l) {
    h = linear_forward(linears_[l], h);
    h = mode == LayerMode::Train ? norms_[l].forward_train(h) : norms_[l].forward_eval(h);
    Mat mask(h.rows(), h.cols());
    for (std::size_t i = 0; i < h.size(); ++i) {
      const bool on = h.data()[i] > 0.0;
      mask.data()[i] = on ? 1.0 : 0.0;
      if (!on) h.data()[i] = 0.0;
    }
    relu_masks_[l] = std::move(mask);
  }
  return linear_forward(linears_.back(), h);
}

void Mlp::backward(const Mat& d_logits) {
  Mat g = linear_backward(linears_.back(), d_logits);
  for (std::size_t l = norms_.size(); l-- > 0;) {
    g = hadamard(g, relu_masks_[l]);
    g = norms_[l].backward(g);
    g = linear_backward(linears_[l], g);
  }
}

void Mlp::sgd_step(double lr, double momentum) {
  for (Linear& lin : linears_) {
    if (lin.d_w.empty()) continue;
    if (momentum > 0.0) {
      if (lin.vel_w.empty()) {
        lin.vel_w = Mat(lin.w.rows(), lin.w.cols());
        lin.vel_b.assign(lin.b.size(), 0.0);
      }
      for (std::size_t i = 0; i < lin.w.size(); ++i) {
        lin.vel_w.data()[i] = momentum * lin.vel_w.data()[i] - lr * lin.d_w.data()[i];
        lin.w.data()[i] += lin.vel_w.data()[i];
      }
      for (std::size_t i = 0; i < lin.b.size(); ++i) {
        lin.vel_b[i] = momentum * lin.vel_b[i] - lr * lin.d_b[i];
        lin.b[i] += lin.vel_b[i];
      }
    } else {
      for (std::size_t i = 0; i < lin.w.size(); ++i) lin.w.data()[i] -= lr * lin.d_w.data()[i];
      for (std::size_t i = 0; i < lin.b.size(); ++i) lin.b[i] -= lr * lin.d_b[i];
    }
  }
  for (NormLayer& n : norms_) n.sgd_step(lr);
}

std::vector<double> Mlp::parameter_snapshot() const {
  std::vector<double> out;
  for (const Linear& lin : linears_) {
    out.insert(out.end(), lin.w.storage().begin(), lin.w.storage().end());
    out.insert(out.end(), lin.b.begin(), lin.b.end());
  }
  for (const NormLayer& n : norms_) {
    out.insert(out.end(), n.state().gamma.begin(), n.state().gamma.end());
    out.insert(out.end(), n.state().beta.begin(), n.state().beta.end());
  }
  return out;
}

}  // namespace normkit
