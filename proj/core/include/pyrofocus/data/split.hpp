#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pyrofocus/data/patch.hpp"

namespace pyrofocus::data {

enum class SplitKind : std::uint8_t { Train = 0, Val = 1, Test = 2 };

const char* to_string(SplitKind kind);
SplitKind split_from_string(const std::string& name);

struct SplitEntry {
  std::uint32_t patch_id = 0;
  std::uint32_t scene_id = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  SplitKind split = SplitKind::Train;

  bool operator==(const SplitEntry&) const = default;
};

struct SplitManifest {
  std::vector<SplitEntry> entries;  // ordered by patch_id
  std::uint64_t seed = 0;

  std::array<std::size_t, 3> counts() const;
  /// CSV with header patch_id,scene_id,row,col,split.
  std::string to_csv() const;
  static SplitManifest from_csv(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SplitManifest load(const std::filesystem::path& path);
};

/// Deterministic shuffle by seed, then contiguous 80/10/10 (by default) cuts
/// with sizes rounded to the nearest patch. Patch ids are the indices into
/// `patches`. Throws ConfigError for ratios not summing to 1, DataError for
/// fewer than 10 patches.
SplitManifest split_dataset(std::span<const Patch> patches, std::array<double, 3> ratios = {0.8, 0.1, 0.1},
                            std::uint64_t seed = 0);

/// One split's patches. Scaling fits and augmentation check `kind()`, so the
/// validation and test sets cannot leak into either.
class Partition {
 public:
  Partition() = default;
  Partition(SplitKind kind, std::vector<Patch> patches) : kind_(kind), patches_(std::move(patches)) {}

  SplitKind kind() const { return kind_; }
  const std::vector<Patch>& patches() const { return patches_; }
  std::vector<Patch>& patches() { return patches_; }
  std::size_t size() const { return patches_.size(); }
  bool empty() const { return patches_.empty(); }

 private:
  SplitKind kind_ = SplitKind::Train;
  std::vector<Patch> patches_;
};

struct Partitions {
  Partition train;
  Partition val;
  Partition test;
};

/// Moves `patches` (indexed by patch_id) into the three partitions.
Partitions partition(std::vector<Patch> patches, const SplitManifest& manifest);

}  // namespace pyrofocus::data
