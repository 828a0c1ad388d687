#pragma once

#include <cstdint>
#include <vector>

#include "pyrofocus/data/scene.hpp"

namespace pyrofocus::data {

struct ClassThresholds {
  double smolder_k = 500.0;
  double flame_k = 800.0;
};

/// Temperature-only class (no saturation rule).
FireClass classify_temperature(double brightness_temperature_k, const ClassThresholds& thresholds);

/// Per-pixel class from the MWIR brightness temperature. Pixels whose MWIR
/// radiance reaches `sensor_max_radiance` are Saturated regardless of
/// temperature. Throws ConfigError when the scene has no band near 3.755 um.
std::vector<std::uint8_t> derive_class_mask(const Scene& scene, const ClassThresholds& thresholds,
                                            double sensor_max_radiance);

}  // namespace pyrofocus::data
