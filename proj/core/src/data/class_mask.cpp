#include "pyrofocus/data/class_mask.hpp"

#include "pyrofocus/errors.hpp"
#include "pyrofocus/synthgen/planck.hpp"

namespace pyrofocus::data {

FireClass classify_temperature(double bt, const ClassThresholds& thresholds) {
  if (bt >= thresholds.flame_k) return FireClass::Flaming;
  if (bt >= thresholds.smolder_k) return FireClass::Smoldering;
  return FireClass::NoFire;
}

std::vector<std::uint8_t> derive_class_mask(const Scene& scene, const ClassThresholds& thresholds,
                                            double sensor_max_radiance) {
  const auto mwir = find_band(scene.wavelengths, kMwirWavelength);
  if (!mwir) throw ConfigError("scene has no MWIR band near 3.755 um");
  const double lambda = scene.wavelengths[*mwir];
  const auto radiance = scene.band(*mwir);
  // Bands are stored as float, so a clipped pixel holds the float-rounded maximum.
  const float clip = static_cast<float>(sensor_max_radiance);
  std::vector<std::uint8_t> mask(radiance.size());
  for (std::size_t i = 0; i < radiance.size(); ++i) {
    const double r = radiance[i];
    FireClass c = radiance[i] >= clip
                      ? FireClass::Saturated
                      : classify_temperature(synth::brightness_temperature(lambda, r), thresholds);
    mask[i] = static_cast<std::uint8_t>(c);
  }
  return mask;
}

}  // namespace pyrofocus::data
