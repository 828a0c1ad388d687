#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pyrofocus::data {

/// Ordinal severity; the numeric code is the on-disk value.
enum class FireClass : std::uint8_t { NoFire = 0, Smoldering = 1, Flaming = 2, Saturated = 3 };

inline constexpr int kNumClasses = 4;

const char* to_string(FireClass c);

inline bool is_fire(FireClass c) { return c != FireClass::NoFire; }

/// MWIR channel used for brightness temperature and saturation.
inline constexpr double kMwirWavelength = 3.755;

/// SWIR 2.160/2.210/2.260, MWIR 3.755/3.910, LWIR 8.200/10.630/11.330/12.130 um.
std::vector<float> default_wavelengths();

struct Geolocation {
  std::vector<double> latitude;   // degrees, H*W row-major
  std::vector<double> longitude;  // degrees, H*W row-major
};

/// Multispectral raster. Band planes are stored band-major, each H*W row-major.
struct Scene {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> wavelengths;  // um, one per band
  std::vector<float> bands;        // C*H*W radiance, W m^-2 sr^-1 um^-1
  std::optional<std::vector<float>> frp;                 // MW per pixel
  std::optional<std::vector<std::uint8_t>> class_mask;   // FireClass codes
  std::optional<Geolocation> geolocation;

  std::size_t channels() const { return wavelengths.size(); }
  std::size_t plane_size() const { return height * width; }
  std::span<const float> band(std::size_t c) const;
  std::span<float> band(std::size_t c);

  /// Throws DataError naming the first violated invariant.
  void validate() const;
};

/// Index of the band whose wavelength is within `tolerance` um of `wavelength`.
std::optional<std::size_t> find_band(std::span<const float> wavelengths, double wavelength,
                                     double tolerance = 0.05);

/// Crops to the top-left `height` x `width` window.
Scene crop(const Scene& scene, std::size_t height, std::size_t width);

}  // namespace pyrofocus::data
