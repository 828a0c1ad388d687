#pragma once

// Synthetic multispectral fire scenes with ground truth.
//
// Fires are ellipses with a linear core-to-edge temperature gradient. They are
// placed only inside patch-grid cells drawn as "fire cells" with probability
// `prevalence`, so the fraction of fire-labelled patches tracks that value.
// Pixel radiance mixes fire and background Planck radiance by the sub-pixel
// fire fraction; pixels whose MWIR brightness temperature would fall within
// `class_margin_k` of a class boundary are pushed out of that band, which
// keeps the classes separable.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pyrofocus/data/class_mask.hpp"
#include "pyrofocus/data/frp_join.hpp"
#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/data/scene.hpp"

namespace pyrofocus::synth {

struct SceneConfig {
  std::size_t height = 72;
  std::size_t width = 192;
  std::vector<float> wavelengths = data::default_wavelengths();

  double background_temp_mean = 300.0;
  double background_temp_std = 5.0;
  double background_length_scale = 16.0;  // value-noise lattice spacing, pixels

  int fires_per_cell_min = 1;
  int fires_per_cell_max = 2;  // 0 disables fires entirely
  double semi_axis_min = 2.0;  // pixels
  double semi_axis_max = 7.0;
  double core_temp_min = 800.0;
  double core_temp_max = 1400.0;
  double edge_temp_min = 450.0;
  double edge_temp_max = 800.0;

  data::ClassThresholds thresholds;
  double saturation_temp_k = 1100.0;     // sets the default per-band sensor maximum
  std::vector<double> sensor_max_radiance;  // per band; empty -> derived from saturation_temp_k
  double class_margin_k = 25.0;          // half-width of the excluded band around each boundary
  double noise_fraction = 0.005;         // Gaussian sigma as a fraction of sensor max

  double prevalence = 0.3;  // probability a patch-grid cell carries fire
  std::size_t patch_height = data::kPatchHeight;
  std::size_t patch_width = data::kPatchWidth;

  double pixel_spacing_m = 50.0;
  double center_lat = 34.2;
  double center_lon = -118.5;
  double point_jitter_m = 2.0;
  double decoy_fraction = 0.01;
  double decoy_min_m = 6.0;
  double decoy_max_m = 20.0;
  double join_threshold_m = 5.0;

  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  /// Per-band sensor maximum actually used.
  std::vector<double> effective_sensor_max() const;
  /// MWIR sensor maximum (the saturation level).
  double mwir_sensor_max() const;
};

struct GeneratedScene {
  data::Scene scene;
  std::vector<data::FrpPoint> points;
  std::vector<std::uint8_t> point_is_decoy;  // parallel to points
  std::vector<std::string> warnings;
  std::size_t fire_cells = 0;
  std::size_t fire_pixels = 0;
};

GeneratedScene generate_scene(const SceneConfig& config);

/// Seed of scene `index` in a dataset generated from `base_seed`.
std::uint64_t scene_seed(std::uint64_t base_seed, std::size_t index);

struct DatasetManifest {
  std::vector<std::string> scenes;  // MSF file names, relative to the dataset dir
  std::vector<std::string> points;  // points CSV file names
  std::uint64_t seed = 0;
  std::string config_json;          // echo of the generator configuration

  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);
};

std::string config_to_json(const SceneConfig& config);

/// Writes `count` scenes (scene_XXXX.msf + scene_XXXX_points.csv) and
/// manifest.json into `dir`. Returns the manifest.
DatasetManifest write_dataset(const SceneConfig& config, std::size_t count, const std::filesystem::path& dir);

}  // namespace pyrofocus::synth
