#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "normkit/mat.hpp"
#include "normkit/norm_layers.hpp"
#include "normkit/rng.hpp"

namespace normkit {

enum class NormKind { None, BatchNorm, LayerNorm, GroupNorm, BatchWhiten, GroupWhiten };

std::string to_string(NormKind k);
NormKind norm_kind_from_string(const std::string& s);

struct NormSetting {
  NormKind kind = NormKind::None;
  std::size_t groups = 1;       // GN / GW
  std::size_t bw_block = 0;     // group-based BW block size; 0 = whole layer
  WhiteningConfig whiten;       // BW / GW
  BwStatMode bw_stat_mode = BwStatMode::Whitener;
  double momentum = 0.1;        // running-average lambda
};

/// One normalization layer inside a network: the spec free functions plus
/// learnable affine parameters and running statistics.
class NormLayer {
 public:
  NormLayer() = default;
  NormLayer(std::size_t width, const NormSetting& setting);

  /// Train-mode forward: batch statistics, caches kept, running stats
  /// updated for the batch-dimension methods.
  Mat forward_train(const Mat& pre);
  /// Eval-mode forward: frozen running statistics for BN/BW; identical to
  /// train for the per-sample methods.
  Mat forward_eval(const Mat& pre) const;
  Mat backward(const Mat& d_out);
  void sgd_step(double lr);

  const LayerState& state() const { return state_; }
  LayerState& mutable_state() { return state_; }
  const NormSetting& setting() const { return setting_; }

 private:
  NormSetting setting_;
  std::size_t width_ = 0;
  LayerState state_;

  // caches from the last train-mode forward
  StandardizeCache std_cache_;
  BwCache bw_cache_;
  std::vector<GwCache> gw_caches_;          // per sample (GW)
  std::vector<StandardizeCache> gn_caches_; // per sample (GN)
  AffineCache affine_cache_;
  std::vector<double> d_gamma_, d_beta_;
};

struct SoftmaxResult {
  double loss = 0.0;
  double accuracy = 0.0;
  Mat d_logits;  // mean-reduced gradient
};

SoftmaxResult softmax_cross_entropy(const Mat& logits, const std::vector<int>& labels);

/// Plain MLP: (Linear -> Norm -> ReLU) x depth -> Linear. He init, fixed
/// per seed.
class Mlp {
 public:
  Mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden, int classes,
      const NormSetting& norm, std::uint64_t seed);

  Mat forward(const Mat& x, LayerMode mode);
  /// Backward through the last train-mode forward; accumulates parameter
  /// gradients internally.
  void backward(const Mat& d_logits);
  void sgd_step(double lr, double momentum = 0.0);

  /// Bitwise-comparable view of all learnable parameters.
  std::vector<double> parameter_snapshot() const;

 private:
  struct Linear {
    Mat w;
    std::vector<double> b;
    Mat x_in;        // cache
    Mat d_w;
    std::vector<double> d_b;
    Mat vel_w;       // momentum buffers (allocated on first use)
    std::vector<double> vel_b;
  };

  Mat linear_forward(Linear& lin, const Mat& x);
  Mat linear_backward(Linear& lin, const Mat& d_out);

  std::vector<Linear> linears_;
  std::vector<NormLayer> norms_;
  std::vector<Mat> relu_masks_;
  int classes_ = 0;
};

}  // namespace normkit
