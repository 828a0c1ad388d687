#pragma once

// Small deterministic scenes and patches for tests.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pyrofocus/data/frp_join.hpp"
#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/data/scene.hpp"

namespace pftest {

/// Random radiance, class mask (mostly NoFire), FRP on fire pixels and a
/// regular geolocation grid with `spacing_m` metre pixels.
inline pyrofocus::data::Scene random_scene(std::size_t h, std::size_t w, std::uint64_t seed, std::size_t channels = 9,
                                           double spacing_m = 50.0) {
  using namespace pyrofocus::data;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 10.0f);
  Scene s;
  s.height = h;
  s.width = w;
  s.wavelengths = default_wavelengths();
  s.wavelengths.resize(channels, 12.0f);
  s.bands.resize(channels * h * w);
  for (auto& v : s.bands) v = u(rng);
  std::vector<std::uint8_t> mask(h * w, 0);
  std::vector<float> frp(h * w, 0.0f);
  for (std::size_t i = 0; i < h * w; ++i) {
    if (rng() % 10 == 0) {
      mask[i] = static_cast<std::uint8_t>(1 + rng() % 3);
      frp[i] = u(rng) + 0.5f;
    }
  }
  s.class_mask = std::move(mask);
  s.frp = std::move(frp);
  Geolocation g;
  const LocalProjection proj(34.0, -118.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double lat, lon;
      proj.unproject((static_cast<double>(c) + 0.5 - w / 2.0) * spacing_m, (h / 2.0 - r - 0.5) * spacing_m, lat, lon);
      g.latitude.push_back(lat);
      g.longitude.push_back(lon);
    }
  }
  s.geolocation = std::move(g);
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pyrofocus_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pftest
