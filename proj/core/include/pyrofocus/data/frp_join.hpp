#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "pyrofocus/data/scene.hpp"

namespace pyrofocus::data {

struct FrpPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  double frp_mw = 0.0;
};

inline constexpr double kEarthRadiusM = 6371008.8;

/// Local equirectangular projection about a reference point; metres east/north.
class LocalProjection {
 public:
  LocalProjection(double ref_lat_deg, double ref_lon_deg);
  /// Reference at the mean latitude/longitude of the geolocation planes.
  static LocalProjection about_center(const Geolocation& geo);

  void project(double lat_deg, double lon_deg, double& east_m, double& north_m) const;
  void unproject(double east_m, double north_m, double& lat_deg, double& lon_deg) const;
  double distance_m(double lat_a, double lon_a, double lat_b, double lon_b) const;

  double ref_lat() const { return ref_lat_; }
  double ref_lon() const { return ref_lon_; }

 private:
  double ref_lat_, ref_lon_;
  double cos_ref_;
};

struct FrpJoinResult {
  std::vector<float> plane;              // H*W, MW; 0 where nothing attached
  std::vector<std::ptrdiff_t> assigned;  // per point: pixel index kept, or -1
  std::size_t rejected_beyond_threshold = 0;
  std::size_t superseded = 0;  // within threshold but lost to a nearer/larger point
};

/// Attaches each point to its nearest pixel center when that center lies
/// within `threshold_m`. Nearest-center ties go to the lower pixel index. A
/// pixel reached by several points keeps the nearest; equal distances keep the
/// larger FRP, then the earlier point. Throws DataError for non-finite
/// coordinates and ConfigError when the scene lacks geolocation.
FrpJoinResult join_frp(std::span<const FrpPoint> points, const Scene& scene, double threshold_m = 5.0);

/// CSV with header lat,lon,frp_mw.
void write_points_csv(std::span<const FrpPoint> points, const std::filesystem::path& path);
std::vector<FrpPoint> read_points_csv(const std::filesystem::path& path);

}  // namespace pyrofocus::data
