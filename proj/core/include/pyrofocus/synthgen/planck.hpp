#pragma once

namespace pyrofocus::synth {

/// First radiation constant 2hc^2 in W um^4 m^-2 sr^-1.
inline constexpr double kPlanckC1 = 1.191042972e8;
/// Second radiation constant hc/k in um K.
inline constexpr double kPlanckC2 = 1.438776877e4;
/// W m^-2 K^-4.
inline constexpr double kStefanBoltzmann = 5.670374419e-8;

/// Blackbody spectral radiance in W m^-2 sr^-1 um^-1.
/// Throws DomainError for non-positive wavelength or temperature.
double planck_radiance(double wavelength_um, double temperature_k);

/// Inverse of planck_radiance in temperature. Non-positive radiance maps to 0 K.
double brightness_temperature(double wavelength_um, double radiance);

}  // namespace pyrofocus::synth
