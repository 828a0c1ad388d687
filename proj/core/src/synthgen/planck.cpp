#include "pyrofocus/synthgen/planck.hpp"

#include <cmath>
#include <string>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::synth {

double planck_radiance(double wavelength_um, double temperature_k) {
  if (!(wavelength_um > 0.0) || !(temperature_k > 0.0)) {
    throw DomainError("planck_radiance needs positive wavelength and temperature, got " +
                      std::to_string(wavelength_um) + " um, " + std::to_string(temperature_k) + " K");
  }
  const double l5 = std::pow(wavelength_um, 5);
  return kPlanckC1 / (l5 * std::expm1(kPlanckC2 / (wavelength_um * temperature_k)));
}

double brightness_temperature(double wavelength_um, double radiance) {
  if (!(wavelength_um > 0.0)) throw DomainError("brightness_temperature needs a positive wavelength");
  if (!(radiance > 0.0)) return 0.0;
  const double l5 = std::pow(wavelength_um, 5);
  return kPlanckC2 / (wavelength_um * std::log1p(kPlanckC1 / (l5 * radiance)));
}

}  // namespace pyrofocus::synth
