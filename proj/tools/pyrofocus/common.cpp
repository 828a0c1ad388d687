#include "common.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "pyrofocus/data/frp_join.hpp"
#include "pyrofocus/data/msf.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/pipeline/report.hpp"
#include "pyrofocus/synthgen/generator.hpp"

namespace pyrofocus::cli {

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("PYROFOCUS_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("PYROFOCUS_SEED is not an unsigned integer: '") + env + "'");
  }
}

void write_config_echo(const fs::path& path, const std::string& command, Json echo) {
  Json out;
  out["command"] = command;
  for (auto& [k, v] : echo.items()) out[k] = v;
  pipeline::write_text(path, out.dump(2) + "\n");
}

RawDataset load_raw_dataset(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw MissingInputError("dataset manifest not found: " + manifest_path.string());
  const auto manifest = synth::DatasetManifest::load(manifest_path);
  if (manifest.points.size() != manifest.scenes.size()) throw DataError("manifest lists scenes and points unevenly");
  std::string missing;
  for (std::size_t i = 0; i < manifest.scenes.size(); ++i) {
    for (const auto& f : {manifest.scenes[i], manifest.points[i]}) {
      if (!fs::exists(dir / f)) missing += (missing.empty() ? "" : ", ") + (dir / f).string();
    }
  }
  if (!missing.empty()) throw MissingInputError("missing dataset files: " + missing);

  RawDataset ds;
  ds.source = dir;
  for (std::size_t i = 0; i < manifest.scenes.size(); ++i) {
    auto scene = data::load_scene(dir / manifest.scenes[i]);
    const auto points = data::read_points_csv(dir / manifest.points[i]);
    if (scene.geolocation) {
      auto joined = data::join_frp(points, scene);
      for (auto a : joined.assigned) ds.points_joined += a >= 0 ? 1 : 0;
      ds.points_rejected += joined.rejected_beyond_threshold;
      ds.points_superseded += joined.superseded;
      // Targets are only defined on fire pixels of the class mask.
      if (scene.class_mask) {
        for (std::size_t k = 0; k < joined.plane.size(); ++k) {
          if ((*scene.class_mask)[k] == 0) joined.plane[k] = 0.0f;
        }
      }
      scene.frp = std::move(joined.plane);
    }
    auto tiling = data::patchify(scene, static_cast<std::uint32_t>(i));
    ds.first_patch.push_back(ds.patches.size());
    for (auto& p : tiling.patches) ds.patches.push_back(std::move(p));
    ds.scene_files.push_back(manifest.scenes[i]);
    ds.scenes.push_back(std::move(scene));
  }
  return ds;
}

PreparedDataset load_prepared(const fs::path& dir) {
  PreparedDataset d;
  d.paths.dir = dir;
  if (!fs::exists(d.paths.dataset())) {
    throw MissingInputError("preprocessed dataset not found: " + d.paths.dataset().string());
  }
  if (!fs::exists(d.paths.scaler())) {
    throw MissingInputError("scaler not found: " + d.paths.scaler().string() +
                            " (run preprocess; the scaler must come from the training split)");
  }
  std::ifstream in(d.paths.dataset());
  try {
    d.info = Json::parse(in);
    d.wavelengths = d.info.at("wavelengths").get<std::vector<float>>();
    d.source = d.info.at("source").get<std::string>();
    d.prevalence = d.info.at("prevalence").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset.json: ") + e.what());
  }
  d.scaler = data::ScalerParams::load(d.paths.scaler());
  return d;
}

models::Checkpoint load_checked_checkpoint(const fs::path& path, const data::ScalerParams* expected) {
  if (!fs::exists(path)) throw MissingInputError("checkpoint not found: " + path.string());
  auto c = models::Checkpoint::load(path);
  if (expected && c.scaler_fingerprint() != expected->fingerprint()) {
    throw IncompatibilityError("checkpoint " + path.string() + " was trained with scaler " +
                               hex64(c.scaler_fingerprint()) + ", data uses " + hex64(expected->fingerprint()));
  }
  return c;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace pyrofocus::cli
