#include "pyrofocus/data/frp_join.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <unordered_map>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::data {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

LocalProjection::LocalProjection(double ref_lat_deg, double ref_lon_deg)
    : ref_lat_(ref_lat_deg), ref_lon_(ref_lon_deg), cos_ref_(std::cos(ref_lat_deg * kDegToRad)) {}

LocalProjection LocalProjection::about_center(const Geolocation& geo) {
  if (geo.latitude.empty()) throw DataError("empty geolocation planes");
  double lat = 0.0, lon = 0.0;
  for (std::size_t i = 0; i < geo.latitude.size(); ++i) {
    lat += geo.latitude[i];
    lon += geo.longitude[i];
  }
  const auto n = static_cast<double>(geo.latitude.size());
  return {lat / n, lon / n};
}

void LocalProjection::project(double lat_deg, double lon_deg, double& east_m, double& north_m) const {
  east_m = (lon_deg - ref_lon_) * kDegToRad * kEarthRadiusM * cos_ref_;
  north_m = (lat_deg - ref_lat_) * kDegToRad * kEarthRadiusM;
}

void LocalProjection::unproject(double east_m, double north_m, double& lat_deg, double& lon_deg) const {
  lat_deg = ref_lat_ + north_m / kEarthRadiusM / kDegToRad;
  lon_deg = ref_lon_ + east_m / (kEarthRadiusM * cos_ref_) / kDegToRad;
}

double LocalProjection::distance_m(double lat_a, double lon_a, double lat_b, double lon_b) const {
  double xa, ya, xb, yb;
  project(lat_a, lon_a, xa, ya);
  project(lat_b, lon_b, xb, yb);
  return std::hypot(xa - xb, ya - yb);
}

FrpJoinResult join_frp(std::span<const FrpPoint> points, const Scene& scene, double threshold_m) {
  if (!(threshold_m > 0.0)) throw ConfigError("join threshold must be positive");
  if (!scene.geolocation) throw ConfigError("scene has no geolocation");
  const auto& geo = *scene.geolocation;
  const auto n = scene.plane_size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].lat) || !std::isfinite(points[i].lon) || !std::isfinite(points[i].frp_mw)) {
      throw DataError("FRP point " + std::to_string(i) + " has non-finite fields");
    }
  }
  const auto proj = LocalProjection::about_center(geo);

  // Bucket pixel centers on a grid whose cell equals the threshold, so every
  // center within the threshold of a point lies in the 3x3 neighbourhood.
  std::vector<double> px(n), py(n);
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;
  const auto key = [](std::int64_t cx, std::int64_t cy) { return cx * 0x100000001ll + cy; };
  for (std::size_t p = 0; p < n; ++p) {
    proj.project(geo.latitude[p], geo.longitude[p], px[p], py[p]);
    const auto cx = static_cast<std::int64_t>(std::floor(px[p] / threshold_m));
    const auto cy = static_cast<std::int64_t>(std::floor(py[p] / threshold_m));
    buckets[key(cx, cy)].push_back(p);
  }

  FrpJoinResult result;
  result.plane.assign(n, 0.0f);
  result.assigned.assign(points.size(), -1);
  std::vector<double> best_dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::ptrdiff_t> best_point(n, -1);

  for (std::size_t i = 0; i < points.size(); ++i) {
    double x, y;
    proj.project(points[i].lat, points[i].lon, x, y);
    const auto cx = static_cast<std::int64_t>(std::floor(x / threshold_m));
    const auto cy = static_cast<std::int64_t>(std::floor(y / threshold_m));
    std::ptrdiff_t nearest = -1;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find(key(cx + dx, cy + dy));
        if (it == buckets.end()) continue;
        for (auto p : it->second) {
          const double d = std::hypot(x - px[p], y - py[p]);
          if (d < nearest_d || (d == nearest_d && static_cast<std::ptrdiff_t>(p) < nearest)) {
            nearest_d = d;
            nearest = static_cast<std::ptrdiff_t>(p);
          }
        }
      }
    }
    if (nearest < 0 || nearest_d > threshold_m) {
      ++result.rejected_beyond_threshold;
      continue;
    }
    const auto p = static_cast<std::size_t>(nearest);
    const auto incumbent = best_point[p];
    const bool wins = incumbent < 0 || nearest_d < best_dist[p] ||
                      (nearest_d == best_dist[p] && points[i].frp_mw > points[static_cast<std::size_t>(incumbent)].frp_mw);
    if (wins) {
      if (incumbent >= 0) ++result.superseded;
      best_dist[p] = nearest_d;
      best_point[p] = static_cast<std::ptrdiff_t>(i);
    } else {
      ++result.superseded;
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (best_point[p] < 0) continue;
    const auto i = static_cast<std::size_t>(best_point[p]);
    result.plane[p] = static_cast<float>(points[i].frp_mw);
    result.assigned[i] = static_cast<std::ptrdiff_t>(p);
  }
  return result;
}

void write_points_csv(std::span<const FrpPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << "lat,lon,frp_mw\n";
  char line[128];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.9g\n", p.lat, p.lon, p.frp_mw);
    out << line;
  }
}

std::vector<FrpPoint> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "lat,lon,frp_mw") {
    throw DataError(path.string() + ": expected header lat,lon,frp_mw");
  }
  std::vector<FrpPoint> points;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    FrpPoint p;
    char* end = nullptr;
    const char* s = line.c_str();
    p.lat = std::strtod(s, &end);
    if (*end != ',') throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    p.lon = std::strtod(end + 1, &end);
    if (*end != ',') throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    p.frp_mw = std::strtod(end + 1, &end);
    points.push_back(p);
  }
  return points;
}

}  // namespace pyrofocus::data
