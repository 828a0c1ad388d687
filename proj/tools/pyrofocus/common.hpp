#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/data/scaler.hpp"
#include "pyrofocus/data/scene.hpp"
#include "pyrofocus/data/split.hpp"
#include "pyrofocus/models/checkpoint.hpp"

namespace pyrofocus::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// --seed when given, else $PYROFOCUS_SEED, else 0. Throws UsageError for a
/// malformed environment value.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag);

/// Writes `echo` (plus the command name) as pretty JSON.
void write_config_echo(const fs::path& path, const std::string& command, Json echo);

/// Scenes of a generated dataset with FRP targets rebuilt from the point
/// lists by the spatial join, and their patch tiling in scene order.
struct RawDataset {
  fs::path source;
  std::vector<std::string> scene_files;
  std::vector<data::Scene> scenes;
  std::vector<data::Patch> patches;  // indexed by patch id
  std::vector<std::size_t> first_patch;  // per scene, index into patches
  std::size_t points_joined = 0;
  std::size_t points_rejected = 0;
  std::size_t points_superseded = 0;
};

/// Throws MissingInputError naming every absent scene or points file.
RawDataset load_raw_dataset(const fs::path& generated_dir);

/// Files written by `preprocess`.
struct PreparedPaths {
  fs::path dir;
  fs::path dataset() const { return dir / "dataset.json"; }
  fs::path scaler() const { return dir / "scaler.json"; }
  fs::path split() const { return dir / "split.csv"; }
  fs::path store(data::SplitKind kind) const { return dir / (std::string(data::to_string(kind)) + ".pfps"); }
};

struct PreparedDataset {
  PreparedPaths paths;
  Json info;  // dataset.json
  data::ScalerParams scaler;
  std::vector<float> wavelengths;
  fs::path source;
  double prevalence = 0.0;
};

/// Reads dataset.json and scaler.json. A missing scaler is a MissingInputError.
PreparedDataset load_prepared(const fs::path& dir);

/// Loads a checkpoint and checks its scaler against the dataset's
/// (IncompatibilityError on a fingerprint mismatch).
models::Checkpoint load_checked_checkpoint(const fs::path& path, const data::ScalerParams* expected);

std::string hex64(std::uint64_t v);

}  // namespace pyrofocus::cli
