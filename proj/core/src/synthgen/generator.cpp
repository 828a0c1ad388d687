#include "pyrofocus/synthgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "pyrofocus/data/msf.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/synthgen/planck.hpp"

namespace pyrofocus::synth {

namespace {

constexpr double kReflectedSwir = 12.0;  // radiance per unit albedo below 3 um
constexpr int kSubsamples = 4;           // per axis, for sub-pixel fire fraction

std::vector<double> value_noise(std::size_t h, std::size_t w, double scale, std::mt19937_64& rng) {
  const auto lh = static_cast<std::size_t>(std::ceil(static_cast<double>(h) / scale)) + 2;
  const auto lw = static_cast<std::size_t>(std::ceil(static_cast<double>(w) / scale)) + 2;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> lattice(lh * lw);
  for (auto& v : lattice) v = gauss(rng);
  const auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    const double u = static_cast<double>(r) / scale;
    const auto i = static_cast<std::size_t>(u);
    const double fu = smooth(u - static_cast<double>(i));
    for (std::size_t c = 0; c < w; ++c) {
      const double v = static_cast<double>(c) / scale;
      const auto j = static_cast<std::size_t>(v);
      const double fv = smooth(v - static_cast<double>(j));
      const double a = lattice[i * lw + j], b = lattice[i * lw + j + 1];
      const double cc = lattice[(i + 1) * lw + j], d = lattice[(i + 1) * lw + j + 1];
      out[r * w + c] = (a * (1 - fv) + b * fv) * (1 - fu) + (cc * (1 - fv) + d * fv) * fu;
    }
  }
  return out;
}

struct Ellipse {
  double cy, cx;  // centre, pixel units (row, col)
  double a, b;    // semi-axes along rotated row / col
  double cos_t, sin_t;
  double core_k, edge_k;

  double radius(double y, double x) const {
    const double dx = x - cx, dy = y - cy;
    const double xr = dx * cos_t + dy * sin_t;
    const double yr = -dx * sin_t + dy * cos_t;
    return std::sqrt((xr / b) * (xr / b) + (yr / a) * (yr / a));
  }
  double half_width() const { return std::sqrt(b * b * cos_t * cos_t + a * a * sin_t * sin_t); }
  double half_height() const { return std::sqrt(b * b * sin_t * sin_t + a * a * cos_t * cos_t); }
};

}  // namespace

void SceneConfig::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError("scene config: " + what); };
  if (height < patch_height || width < patch_width) fail("scene smaller than one patch");
  if (wavelengths.empty()) fail("no bands");
  for (auto w : wavelengths) {
    if (!(w > 0.0f)) fail("non-positive wavelength");
  }
  if (!data::find_band(wavelengths, data::kMwirWavelength)) fail("no MWIR band near 3.755 um");
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) fail("prevalence outside [0,1]");
  if (!(background_temp_mean > 0.0) || background_temp_std < 0.0) fail("bad background temperature");
  if (!(core_temp_min > 0.0 && core_temp_min <= core_temp_max)) fail("core temperature range not ordered");
  if (!(edge_temp_min > 0.0 && edge_temp_min <= edge_temp_max)) fail("edge temperature range not ordered");
  if (fires_per_cell_min < 0 || fires_per_cell_max < fires_per_cell_min) fail("fire count range not ordered");
  if (!(semi_axis_min >= 1.0 && semi_axis_min <= semi_axis_max)) fail("semi-axis range invalid (min must be >= 1)");
  if (!(thresholds.smolder_k < thresholds.flame_k && thresholds.flame_k < saturation_temp_k)) {
    fail("class thresholds must satisfy smolder < flame < saturation");
  }
  if (!sensor_max_radiance.empty() && sensor_max_radiance.size() != wavelengths.size()) {
    fail("sensor_max_radiance needs one value per band");
  }
  if (class_margin_k < 0.0 || noise_fraction < 0.0) fail("negative margin or noise");
  if (!(pixel_spacing_m > decoy_max_m + join_threshold_m)) {
    fail("pixel spacing must exceed decoy_max_m + join_threshold_m so decoys stay unmatched");
  }
  if (!(point_jitter_m * std::numbers::sqrt2 < join_threshold_m)) fail("point jitter can exceed the join threshold");
  if (!(decoy_min_m > join_threshold_m && decoy_min_m <= decoy_max_m)) fail("decoy distance range invalid");
}

std::vector<double> SceneConfig::effective_sensor_max() const {
  if (!sensor_max_radiance.empty()) return sensor_max_radiance;
  std::vector<double> out;
  out.reserve(wavelengths.size());
  for (auto w : wavelengths) out.push_back(planck_radiance(w, saturation_temp_k));
  return out;
}

double SceneConfig::mwir_sensor_max() const {
  return effective_sensor_max()[*data::find_band(wavelengths, data::kMwirWavelength)];
}

std::uint64_t scene_seed(std::uint64_t base_seed, std::size_t index) {
  // splitmix64 finalizer
  std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

GeneratedScene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const auto h = cfg.height, w = cfg.width, n = h * w, channels = cfg.wavelengths.size();
  const auto mwir = *data::find_band(cfg.wavelengths, data::kMwirWavelength);
  const double lambda_mwir = cfg.wavelengths[mwir];
  const auto sensor_max = cfg.effective_sensor_max();
  const double mwir_max = sensor_max[mwir];
  const double saturation_bt = brightness_temperature(lambda_mwir, mwir_max);

  GeneratedScene out;
  auto& scene = out.scene;
  scene.height = h;
  scene.width = w;
  scene.wavelengths = cfg.wavelengths;

  const auto tnoise = value_noise(h, w, cfg.background_length_scale, rng);
  const auto anoise = value_noise(h, w, cfg.background_length_scale, rng);
  std::vector<double> t_bg(n), albedo(n);
  for (std::size_t i = 0; i < n; ++i) {
    t_bg[i] = cfg.background_temp_mean + cfg.background_temp_std * tnoise[i];
    albedo[i] = std::clamp(0.2 + 0.05 * anoise[i], 0.05, 0.5);
  }

  // Fire placement, cell by cell.
  std::vector<double> fraction(n, 0.0), t_fire(n, 0.0), strength(n, 0.0);
  const auto grid_rows = h / cfg.patch_height, grid_cols = w / cfg.patch_width;
  const auto ph = static_cast<double>(cfg.patch_height), pw = static_cast<double>(cfg.patch_width);
  for (std::size_t gr = 0; gr < grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < grid_cols; ++gc) {
      const bool fire_cell = unit(rng) < cfg.prevalence && cfg.fires_per_cell_max > 0;
      if (!fire_cell) continue;
      ++out.fire_cells;
      const double y0 = static_cast<double>(gr) * ph, x0 = static_cast<double>(gc) * pw;
      std::uniform_int_distribution<int> count_dist(std::max(1, cfg.fires_per_cell_min), cfg.fires_per_cell_max);
      const int fires = count_dist(rng);
      for (int f = 0; f < fires; ++f) {
        Ellipse e{};
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
          e.a = uniform(cfg.semi_axis_min, cfg.semi_axis_max);
          e.b = uniform(cfg.semi_axis_min, 2.0 * cfg.semi_axis_max);
          const double theta = uniform(0.0, std::numbers::pi);
          e.cos_t = std::cos(theta);
          e.sin_t = std::sin(theta);
          const double hx = e.half_width(), hy = e.half_height();
          if (2.0 * hx >= pw || 2.0 * hy >= ph) continue;  // rejected: cannot fit in the cell
          e.cx = uniform(x0 + hx, x0 + pw - hx);
          e.cy = uniform(y0 + hy, y0 + ph - hy);
          placed = true;
        }
        if (!placed) {
          e.cx = x0 + pw / 2.0;
          e.cy = y0 + ph / 2.0;
          out.warnings.push_back("fire geometry exceeded cell (" + std::to_string(gr) + "," + std::to_string(gc) +
                                 "); clipped to the cell");
        }
        e.core_k = uniform(cfg.core_temp_min, cfg.core_temp_max);
        e.edge_k = uniform(cfg.edge_temp_min, std::min(cfg.edge_temp_max, e.core_k));

        const double hx = e.half_width(), hy = e.half_height();
        const auto r0 = static_cast<std::size_t>(std::max(y0, std::floor(e.cy - hy)));
        const auto r1 = static_cast<std::size_t>(std::min(y0 + ph, std::ceil(e.cy + hy)));
        const auto c0 = static_cast<std::size_t>(std::max(x0, std::floor(e.cx - hx)));
        const auto c1 = static_cast<std::size_t>(std::min(x0 + pw, std::ceil(e.cx + hx)));
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            int inside = 0;
            for (int si = 0; si < kSubsamples; ++si) {
              for (int sj = 0; sj < kSubsamples; ++sj) {
                const double y = static_cast<double>(r) + (si + 0.5) / kSubsamples;
                const double x = static_cast<double>(c) + (sj + 0.5) / kSubsamples;
                if (e.radius(y, x) <= 1.0) ++inside;
              }
            }
            if (inside == 0) continue;
            const double frac = static_cast<double>(inside) / (kSubsamples * kSubsamples);
            const double rc = std::min(1.0, e.radius(static_cast<double>(r) + 0.5, static_cast<double>(c) + 0.5));
            const double temp = e.core_k + (e.edge_k - e.core_k) * rc;
            const double s = frac * planck_radiance(lambda_mwir, temp);
            const auto idx = r * w + c;
            if (s > strength[idx]) {
              strength[idx] = s;
              fraction[idx] = frac;
              t_fire[idx] = temp;
            }
          }
        }
      }
    }
  }

  // Radiance, labels and FRP.
  const double boundaries[3] = {cfg.thresholds.smolder_k, cfg.thresholds.flame_k, saturation_bt};
  const double pixel_area = cfg.pixel_spacing_m * cfg.pixel_spacing_m;
  scene.bands.assign(channels * n, 0.0f);
  scene.class_mask.emplace(n, 0);
  scene.frp.emplace(n, 0.0f);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = fraction[i];
    double tf = t_fire[i];
    if (f > 0.0) {
      const double bg_mwir = planck_radiance(lambda_mwir, t_bg[i]);
      const double bt = brightness_temperature(lambda_mwir, f * planck_radiance(lambda_mwir, tf) + (1 - f) * bg_mwir);
      for (double boundary : boundaries) {
        if (std::abs(bt - boundary) >= cfg.class_margin_k) continue;
        const double target_bt = bt < boundary ? boundary - cfg.class_margin_k : boundary + cfg.class_margin_k;
        const double needed = (planck_radiance(lambda_mwir, target_bt) - (1 - f) * bg_mwir) / f;
        tf = brightness_temperature(lambda_mwir, needed);
        break;
      }
    }
    const double mwir_clean = f * (f > 0.0 ? planck_radiance(lambda_mwir, tf) : 0.0) +
                              (1 - f) * planck_radiance(lambda_mwir, t_bg[i]);
    data::FireClass cls = data::FireClass::NoFire;
    if (f > 0.0) {
      cls = mwir_clean >= mwir_max
                ? data::FireClass::Saturated
                : data::classify_temperature(brightness_temperature(lambda_mwir, mwir_clean), cfg.thresholds);
    }
    (*scene.class_mask)[i] = static_cast<std::uint8_t>(cls);
    if (cls != data::FireClass::NoFire) {
      (*scene.frp)[i] = static_cast<float>(kStefanBoltzmann * f * pixel_area *
                                           (std::pow(tf, 4) - std::pow(t_bg[i], 4)) * 1e-6);
      ++out.fire_pixels;
    }
    for (std::size_t b = 0; b < channels; ++b) {
      const double lambda = cfg.wavelengths[b];
      double radiance = (1 - f) * planck_radiance(lambda, t_bg[i]);
      if (lambda < 3.0) radiance += (1 - f) * kReflectedSwir * albedo[i];
      if (f > 0.0) radiance += f * planck_radiance(lambda, tf);
      radiance += cfg.noise_fraction * sensor_max[b] * gauss(rng);
      scene.bands[b * n + i] = static_cast<float>(std::clamp(radiance, 0.0, sensor_max[b]));
    }
  }

  // Geolocation about the scene centre.
  const data::LocalProjection proj(cfg.center_lat, cfg.center_lon);
  data::Geolocation geo;
  geo.latitude.resize(n);
  geo.longitude.resize(n);
  const auto east_of = [&](std::size_t c) { return (static_cast<double>(c) + 0.5 - static_cast<double>(w) / 2.0) * cfg.pixel_spacing_m; };
  const auto north_of = [&](std::size_t r) { return (static_cast<double>(h) / 2.0 - static_cast<double>(r) - 0.5) * cfg.pixel_spacing_m; };
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) proj.unproject(east_of(c), north_of(r), geo.latitude[r * w + c], geo.longitude[r * w + c]);
  }
  scene.geolocation = std::move(geo);

  // FRP points: one per fire pixel within the jitter box, then decoys.
  std::vector<std::size_t> fire_idx;
  float frp_peak = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float v = (*scene.frp)[i];
    if (v <= 0.0f) continue;
    fire_idx.push_back(i);
    frp_peak = std::max(frp_peak, v);
    double lat, lon;
    proj.unproject(east_of(i % w) + uniform(-cfg.point_jitter_m, cfg.point_jitter_m),
                   north_of(i / w) + uniform(-cfg.point_jitter_m, cfg.point_jitter_m), lat, lon);
    out.points.push_back({lat, lon, static_cast<double>(v)});
    out.point_is_decoy.push_back(0);
  }
  if (!fire_idx.empty()) {
    const auto decoys = static_cast<std::size_t>(std::ceil(cfg.decoy_fraction * static_cast<double>(fire_idx.size())));
    std::uniform_int_distribution<std::size_t> pick(0, fire_idx.size() - 1);
    for (std::size_t k = 0; k < decoys; ++k) {
      const auto i = fire_idx[pick(rng)];
      const double angle = uniform(0.0, 2.0 * std::numbers::pi);
      const double dist = uniform(cfg.decoy_min_m, cfg.decoy_max_m);
      double lat, lon;
      proj.unproject(east_of(i % w) + dist * std::cos(angle), north_of(i / w) + dist * std::sin(angle), lat, lon);
      const float value = static_cast<float>(uniform(0.01, 1.0) * frp_peak);
      out.points.push_back({lat, lon, static_cast<double>(value)});
      out.point_is_decoy.push_back(1);
    }
  }
  return out;
}

std::string config_to_json(const SceneConfig& c) {
  nlohmann::ordered_json j;
  j["height"] = c.height;
  j["width"] = c.width;
  j["wavelengths"] = c.wavelengths;
  j["background_temp_mean"] = c.background_temp_mean;
  j["background_temp_std"] = c.background_temp_std;
  j["background_length_scale"] = c.background_length_scale;
  j["fires_per_cell_min"] = c.fires_per_cell_min;
  j["fires_per_cell_max"] = c.fires_per_cell_max;
  j["semi_axis_min"] = c.semi_axis_min;
  j["semi_axis_max"] = c.semi_axis_max;
  j["core_temp_range"] = {c.core_temp_min, c.core_temp_max};
  j["edge_temp_range"] = {c.edge_temp_min, c.edge_temp_max};
  j["smolder_k"] = c.thresholds.smolder_k;
  j["flame_k"] = c.thresholds.flame_k;
  j["saturation_temp_k"] = c.saturation_temp_k;
  j["sensor_max_radiance"] = c.effective_sensor_max();
  j["class_margin_k"] = c.class_margin_k;
  j["noise_fraction"] = c.noise_fraction;
  j["prevalence"] = c.prevalence;
  j["patch"] = {c.patch_height, c.patch_width};
  j["pixel_spacing_m"] = c.pixel_spacing_m;
  j["center"] = {c.center_lat, c.center_lon};
  j["point_jitter_m"] = c.point_jitter_m;
  j["decoy_fraction"] = c.decoy_fraction;
  j["decoy_range_m"] = {c.decoy_min_m, c.decoy_max_m};
  j["seed"] = c.seed;
  return j.dump(2);
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["scenes"] = scenes;
  j["points"] = points;
  j["config"] = nlohmann::ordered_json::parse(config_json);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("dataset manifest not found: " + path.string());
  DatasetManifest m;
  try {
    const auto j = nlohmann::ordered_json::parse(in);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.scenes = j.at("scenes").get<std::vector<std::string>>();
    m.points = j.at("points").get<std::vector<std::string>>();
    m.config_json = j.at("config").dump(2);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset manifest: ") + e.what());
  }
  return m;
}

DatasetManifest write_dataset(const SceneConfig& config, std::size_t count, const std::filesystem::path& dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + dir.string() + ": " + ec.message());
  DatasetManifest manifest;
  manifest.seed = config.seed;
  manifest.config_json = config_to_json(config);
  for (std::size_t i = 0; i < count; ++i) {
    SceneConfig sc = config;
    sc.seed = scene_seed(config.seed, i);
    const auto generated = generate_scene(sc);
    char name[64];
    std::snprintf(name, sizeof name, "scene_%04zu", i);
    const std::string msf = std::string(name) + ".msf";
    const std::string csv = std::string(name) + "_points.csv";
    data::save_scene(generated.scene, dir / msf);
    data::write_points_csv(generated.points, dir / csv);
    manifest.scenes.push_back(msf);
    manifest.points.push_back(csv);
  }
  manifest.save(dir / "manifest.json");
  return manifest;
}

}  // namespace pyrofocus::synth
