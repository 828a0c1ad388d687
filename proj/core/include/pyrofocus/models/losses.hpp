#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pyrofocus/numerics/tensor.hpp"

namespace pyrofocus::models {

struct FrpLossConfig {
  double alpha = 1.0;  // masked MAE over fire pixels
  double beta = 0.1;   // MSE over all pixels
  double gamma = 0.5;  // mean positive prediction over non-fire pixels

  /// Throws ConfigError unless all weights >= 0 and alpha > 0.
  void validate() const;
};

/// alpha * mean_{fire}|pred - target| + beta * mean_{all}(pred - target)^2
///   + gamma * mean_{non-fire} max(pred, 0).
/// A term over an empty pixel set is 0. `pred` is [N,1,H,W]; target and
/// fire_mask hold N*H*W values. Throws DimensionError on size mismatch and
/// DataError for non-finite or negative targets.
template <typename T>
nn::Tensor<T> frp_loss(const nn::Tensor<T>& pred, std::span<const T> target, std::span<const std::uint8_t> fire_mask,
                       const FrpLossConfig& config = {});

/// Class-majority downsampling of N label planes [N,H,W] by `factor` per
/// axis. Ties go to the more severe (higher) class.
std::vector<std::int32_t> downsample_labels(std::span<const std::int32_t> labels, std::size_t n, std::size_t h,
                                            std::size_t w, std::size_t factor);

/// Block-mean FRP downsampling; a coarse pixel is fire when any fine pixel is.
void downsample_frp(std::span<const float> frp, std::span<const std::uint8_t> fire_mask, std::size_t n,
                    std::size_t h, std::size_t w, std::size_t factor, std::vector<float>& frp_out,
                    std::vector<std::uint8_t>& mask_out);

}  // namespace pyrofocus::models
