#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/data/split.hpp"

namespace pyrofocus::data {

/// Per-band MinMax parameters plus the FRP target range. A band with
/// max == min is degenerate and scales to 0.
struct ScalerParams {
  std::string method = "minmax";  // Standard/Robust were evaluated and rejected; only minmax is implemented
  std::vector<float> band_min;
  std::vector<float> band_max;
  std::vector<bool> degenerate;
  float frp_min = 0.0f;
  float frp_max = 0.0f;
  bool frp_degenerate = true;

  std::size_t channels() const { return band_min.size(); }

  std::string to_json() const;
  static ScalerParams from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static ScalerParams load(const std::filesystem::path& path);
  /// Hash of the canonical JSON; checkpoints record it to detect mismatched data.
  std::uint64_t fingerprint() const;

  bool operator==(const ScalerParams&) const = default;
};

/// Fits on the training partition only; any other partition is a UsageError.
ScalerParams fit_minmax(const Partition& train);

/// In-place scaling of C planes of `plane_size` values. Throws DimensionError
/// when the data does not hold exactly channels() planes.
template <typename T>
void apply_scaler(const ScalerParams& params, std::span<T> planes, std::size_t plane_size);
template <typename T>
void invert_scaler(const ScalerParams& params, std::span<T> planes, std::size_t plane_size);

float scale_frp(const ScalerParams& params, float frp_mw);
float unscale_frp(const ScalerParams& params, float normalized);

/// Scales a patch's band data and FRP targets in place.
void apply_scaler(const ScalerParams& params, Patch& patch);
void apply_scaler(const ScalerParams& params, Partition& partition);

}  // namespace pyrofocus::data
