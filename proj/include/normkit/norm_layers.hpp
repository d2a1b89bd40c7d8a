#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "normkit/mat.hpp"
#include "normkit/whitening.hpp"

namespace normkit {

/// Non-fatal diagnostics (feasibility-range warnings). Default sink writes
/// to stderr; tests can swap it out.
void set_warning_handler(std::function<void(const std::string&)> handler);
void warn(const std::string& message);

// ---------------------------------------------------------------------------
// Group division
// ---------------------------------------------------------------------------

struct GroupSpec {
  std::size_t d = 0;  // channels
  std::size_t g = 1;  // group count
  std::size_t c = 0;  // channels per group

  /// Contiguous layout: group i covers channels [i*c, (i+1)*c). Throws
  /// InfeasibleError when g does not divide d, suggesting the largest
  /// divisor of d that is <= g.
  static GroupSpec make(std::size_t d, std::size_t g);
};

/// Pi: length-d vector -> g x c matrix, row i = channels [i*c, (i+1)*c).
Mat group_divide(const std::vector<double>& x, const GroupSpec& spec);

/// Pi^{-1}: exact inverse of group_divide.
std::vector<double> group_merge(const Mat& xg, const GroupSpec& spec);

// ---------------------------------------------------------------------------
// Convolutional unrolling
// ---------------------------------------------------------------------------

struct ConvShape {
  std::size_t d = 0, m = 0, h = 0, w = 0;
  std::size_t volume() const { return d * m * h * w; }
};

/// 4-D activation tensor, layout [channel][sample][row][col] row-major.
struct Tensor4 {
  ConvShape shape;
  std::vector<double> data;

  Tensor4() = default;
  explicit Tensor4(const ConvShape& s) : shape(s), data(s.volume(), 0.0) {}

  double& at(std::size_t di, std::size_t mi, std::size_t hi, std::size_t wi) {
    return data[((di * shape.m + mi) * shape.h + hi) * shape.w + wi];
  }
  double at(std::size_t di, std::size_t mi, std::size_t hi, std::size_t wi) const {
    return data[((di * shape.m + mi) * shape.h + hi) * shape.w + wi];
  }
};

/// BatchAxis: every spatial position is a sample -> d x (m*H*W).
/// ChannelAxis: every spatial position is a neuron -> (d*H*W) x m, rows
/// ordered channel-major then row-major spatial.
enum class UnrollMode { BatchAxis, ChannelAxis };

Mat unroll_conv(const Tensor4& t, UnrollMode mode);
Tensor4 reroll_conv(const Mat& m, const ConvShape& shape, UnrollMode mode);

// ---------------------------------------------------------------------------
// Standardization (BN rows / LN columns)
// ---------------------------------------------------------------------------

enum class StandardizeAxis { PerRowOverCols, PerColOverRows };

struct StandardizeCache {
  StandardizeAxis axis = StandardizeAxis::PerRowOverCols;
  Mat xhat;
  std::vector<double> mean;
  std::vector<double> inv_std;
};

/// Subtract the slice mean and divide by sqrt(var + eps). Row mode
/// standardizes each row across columns (BN); column mode each column
/// across rows (LN). Throws InfeasibleError when the reduced axis is
/// shorter than 2.
Mat standardize_train(const Mat& x, StandardizeAxis axis, double eps, StandardizeCache* cache = nullptr);

Mat standardize_backward(const Mat& d_xhat, const StandardizeCache& cache);

// ---------------------------------------------------------------------------
// Batch whitening (optionally group-blocked along channels)
// ---------------------------------------------------------------------------

struct BwBlockCache {
  Mat xc;  // block_channels x m, centered
  Mat w;   // whitening matrix for the block
  EigenDecomp zca;
  ItnTrace itn;
};

struct BwCache {
  WhiteningConfig cfg;
  std::size_t block_channels = 0;
  std::size_t m = 0;
  std::vector<double> mean;  // per channel
  std::vector<BwBlockCache> blocks;
};

/// Center each channel over the batch, then whiten each channel block of
/// size `group_channels` (whole d when unset). Emits a feasibility warning
/// when m < (block+3)/2 under ZCA.
Mat bw_forward_train(const Mat& x, const WhiteningConfig& cfg,
                     std::optional<std::size_t> group_channels, BwCache* cache);

Mat bw_backward(const Mat& d_xhat, const BwCache& cache);

// ---------------------------------------------------------------------------
// Group whitening (per sample)
// ---------------------------------------------------------------------------

/// Primary runs the whitening kernel on the g x g group covariance as
/// written. Gram runs it on the c x c Gram matrix and right-multiplies,
/// which is the same map (identical output and gradient) at O(c^3) instead
/// of O(g^3); Auto picks Gram when c < g.
enum class GwRoute { Auto, Primary, Gram };

struct GwCache {
  GroupSpec spec;
  WhiteningConfig cfg;
  bool gram = false;
  Mat xc;  // g x c, centered rows
  Mat w;   // g x g whitener (primary) or c x c right factor (gram)
  EigenDecomp zca;
  ItnTrace itn;
};

std::vector<double> gw_forward(const std::vector<double>& x, const GroupSpec& spec,
                               const WhiteningConfig& cfg, GwCache* cache = nullptr,
                               GwRoute route = GwRoute::Auto);

std::vector<double> gw_backward(const std::vector<double>& d_xhat, const GwCache& cache);

// ---------------------------------------------------------------------------
// Running statistics, inference, affine
// ---------------------------------------------------------------------------

enum class LayerMode { Train, Eval };
enum class BwStatMode { Whitener, Covariance };  // Covariance = BW_Sigma variant

struct LayerState {
  std::size_t d = 0;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  /// d x 1 inverse stddev for BN, d x d whitener (or covariance in
  /// Covariance mode) for BW.
  Mat running_whitener;
  double momentum = 0.1;
  LayerMode mode = LayerMode::Train;
  BwStatMode bw_stat_mode = BwStatMode::Whitener;
  WhiteningConfig bw_cfg;          // used by bw_eval in Covariance mode
  std::size_t bw_block_channels = 0;  // 0 = whole d
  std::uint64_t update_count = 0;

  static LayerState make(std::size_t d, double momentum = 0.1);
};

/// Running-average blend: new = (1-lambda) * old + lambda * batch, applied
/// to the mean and the whitener (or covariance) alike.
LayerState update_running(LayerState state, const std::vector<double>& batch_mean,
                          const Mat& batch_whitener, double lambda);

/// Frozen-statistics inference. Both throw when the running stats were
/// never updated.
Mat bn_eval(const Mat& x, const LayerState& state);
Mat bw_eval(const Mat& x, const LayerState& state);

struct AffineCache {
  Mat xhat;
  std::vector<double> gamma;
};

struct AffineGrads {
  Mat d_xhat;
  std::vector<double> d_gamma;
  std::vector<double> d_beta;
};

/// y_ij = gamma_i * xhat_ij + beta_i (channel = row).
Mat affine_forward(const Mat& xhat, const std::vector<double>& gamma,
                   const std::vector<double>& beta, AffineCache* cache = nullptr);

AffineGrads affine_backward(const Mat& d_y, const AffineCache& cache);

}  // namespace normkit
