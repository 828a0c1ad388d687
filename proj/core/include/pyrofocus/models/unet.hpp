#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pyrofocus/models/parameters.hpp"

namespace pyrofocus::models {

enum class UNetHead { Segmentation, Frp };

const char* to_string(UNetHead head);
UNetHead unet_head_from_string(const std::string& name);

struct UNetSpec {
  std::size_t in_channels = 9;
  UNetHead head = UNetHead::Segmentation;
  int depth = 3;
  std::size_t base_width = 32;
  bool deep_supervision = true;

  std::size_t out_channels() const { return head == UNetHead::Segmentation ? 4 : 1; }
  /// Throws ConfigError unless 1 <= depth <= 3, base_width >= 1 and
  /// in_channels >= 1. Depth 3 is the deepest level at which 24x64 halves
  /// cleanly at every level (24 -> 12 -> 6 -> 3), so no padding is used.
  void validate() const;
  std::string to_json() const;
  static UNetSpec from_json(const std::string& text);
  bool operator==(const UNetSpec&) const = default;
};

struct UNetOutput {
  FTensor main;              // [N, K, H, W]
  std::vector<FTensor> aux;  // aux[k] at 1/2^(k+1) scale; empty without deep supervision
};

/// Residual U-Net. Every block is conv3x3 -> BN -> ReLU -> conv3x3 -> BN,
/// plus an identity (or 1x1 conv + BN when widths differ) shortcut, then
/// ReLU. The encoder max-pools between levels; the decoder upsamples with a
/// 2x2 stride-2 transposed convolution and concatenates the skip features.
/// Widths are base_width * 2^level. With deep supervision, a 1x1 head on
/// every decoder level except the last produces auxiliary outputs.
class UNet {
 public:
  explicit UNet(UNetSpec spec, std::uint64_t seed = 0);
  ~UNet();
  UNet(UNet&&) noexcept;
  UNet& operator=(UNet&&) noexcept;

  /// Raw outputs (logits or unclamped FRP). Throws DimensionError when the
  /// spatial dims are not divisible by 2^depth or channels differ.
  UNetOutput forward(const FTensor& x, nn::Mode mode) const;

  /// Eval-mode inference. Segmentation returns per-pixel class probabilities
  /// [N,4,H,W]; FRP returns values clamped at 0, [N,1,H,W].
  FTensor infer(const FTensor& x) const;

  const UNetSpec& spec() const { return spec_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.parameter_count(); }

 private:
  struct Impl;
  UNetSpec spec_;
  ParameterSet params_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pyrofocus::models
