#include "pyrofocus/data/scene.hpp"

#include <cmath>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::data {

const char* to_string(FireClass c) {
  switch (c) {
    case FireClass::NoFire:
      return "NoFire";
    case FireClass::Smoldering:
      return "Smoldering";
    case FireClass::Flaming:
      return "Flaming";
    case FireClass::Saturated:
      return "Saturated";
  }
  return "?";
}

std::vector<float> default_wavelengths() {
  return {2.160f, 2.210f, 2.260f, 3.755f, 3.910f, 8.200f, 10.630f, 11.330f, 12.130f};
}

std::span<const float> Scene::band(std::size_t c) const {
  return std::span<const float>(bands).subspan(c * plane_size(), plane_size());
}

std::span<float> Scene::band(std::size_t c) {
  return std::span<float>(bands).subspan(c * plane_size(), plane_size());
}

void Scene::validate() const {
  const auto n = plane_size();
  if (height == 0 || width == 0) throw DataError("scene has zero extent");
  if (wavelengths.empty()) throw DataError("scene has no bands");
  if (bands.size() != channels() * n) {
    throw DataError("scene holds " + std::to_string(bands.size()) + " band values, expected " +
                    std::to_string(channels() * n));
  }
  if (frp && frp->size() != n) throw DataError("FRP plane size does not match scene");
  if (class_mask) {
    if (class_mask->size() != n) throw DataError("class mask size does not match scene");
    for (auto v : *class_mask) {
      if (v >= kNumClasses) throw DataError("class mask code " + std::to_string(v) + " outside {0,1,2,3}");
    }
  }
  if (frp) {
    for (std::size_t i = 0; i < n; ++i) {
      const float v = (*frp)[i];
      if (!(v >= 0.0f) || !std::isfinite(v)) {
        throw DataError("FRP at pixel " + std::to_string(i) + " is negative or non-finite");
      }
      if (class_mask && (*class_mask)[i] == 0 && v != 0.0f) {
        throw DataError("FRP nonzero on NoFire pixel " + std::to_string(i));
      }
    }
  }
  if (geolocation && (geolocation->latitude.size() != n || geolocation->longitude.size() != n)) {
    throw DataError("geolocation planes do not match scene");
  }
}

std::optional<std::size_t> find_band(std::span<const float> wavelengths, double wavelength, double tolerance) {
  std::optional<std::size_t> best;
  double best_err = tolerance;
  for (std::size_t i = 0; i < wavelengths.size(); ++i) {
    const double err = std::abs(static_cast<double>(wavelengths[i]) - wavelength);
    if (err <= best_err) {
      best = i;
      best_err = err;
    }
  }
  return best;
}

Scene crop(const Scene& scene, std::size_t height, std::size_t width) {
  if (height > scene.height || width > scene.width) throw DataError("crop window exceeds scene");
  Scene out;
  out.height = height;
  out.width = width;
  out.wavelengths = scene.wavelengths;
  const auto copy_plane = [&](const auto* src, auto* dst) {
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) dst[r * width + c] = src[r * scene.width + c];
    }
  };
  out.bands.resize(scene.channels() * height * width);
  for (std::size_t b = 0; b < scene.channels(); ++b) {
    copy_plane(scene.band(b).data(), out.bands.data() + b * height * width);
  }
  if (scene.frp) {
    out.frp.emplace(height * width);
    copy_plane(scene.frp->data(), out.frp->data());
  }
  if (scene.class_mask) {
    out.class_mask.emplace(height * width);
    copy_plane(scene.class_mask->data(), out.class_mask->data());
  }
  if (scene.geolocation) {
    Geolocation g;
    g.latitude.resize(height * width);
    g.longitude.resize(height * width);
    copy_plane(scene.geolocation->latitude.data(), g.latitude.data());
    copy_plane(scene.geolocation->longitude.data(), g.longitude.data());
    out.geolocation = std::move(g);
  }
  return out;
}

}  // namespace pyrofocus::data
