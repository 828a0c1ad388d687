#include "pyrofocus/data/split.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::data {

const char* to_string(SplitKind kind) {
  switch (kind) {
    case SplitKind::Train:
      return "train";
    case SplitKind::Val:
      return "val";
    case SplitKind::Test:
      return "test";
  }
  return "?";
}

SplitKind split_from_string(const std::string& name) {
  if (name == "train") return SplitKind::Train;
  if (name == "val") return SplitKind::Val;
  if (name == "test") return SplitKind::Test;
  throw DataError("unknown split name '" + name + "'");
}

std::array<std::size_t, 3> SplitManifest::counts() const {
  std::array<std::size_t, 3> c{0, 0, 0};
  for (const auto& e : entries) ++c[static_cast<std::size_t>(e.split)];
  return c;
}

std::string SplitManifest::to_csv() const {
  std::ostringstream out;
  out << "patch_id,scene_id,row,col,split\n";
  for (const auto& e : entries) {
    out << e.patch_id << ',' << e.scene_id << ',' << e.row << ',' << e.col << ',' << to_string(e.split) << '\n';
  }
  return out.str();
}

SplitManifest SplitManifest::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "patch_id,scene_id,row,col,split") {
    throw DataError("split manifest: expected header patch_id,scene_id,row,col,split");
  }
  SplitManifest m;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[5];
    for (auto& f : field) {
      if (!std::getline(row, f, ',')) throw DataError("split manifest: malformed row '" + line + "'");
    }
    SplitEntry e;
    e.patch_id = static_cast<std::uint32_t>(std::stoul(field[0]));
    e.scene_id = static_cast<std::uint32_t>(std::stoul(field[1]));
    e.row = std::stoul(field[2]);
    e.col = std::stoul(field[3]);
    e.split = split_from_string(field[4]);
    m.entries.push_back(e);
  }
  return m;
}

void SplitManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << to_csv();
}

SplitManifest SplitManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

SplitManifest split_dataset(std::span<const Patch> patches, std::array<double, 3> ratios, std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw ConfigError("split ratios must be non-negative and sum to 1, got sum " + std::to_string(total));
  }
  const auto n = patches.size();
  if (n < 10) throw DataError("need at least 10 patches to split, got " + std::to_string(n));

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));

  SplitManifest m;
  m.seed = seed;
  m.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = m.entries[i];
    e.patch_id = static_cast<std::uint32_t>(i);
    e.scene_id = patches[i].scene_id;
    e.row = patches[i].row;
    e.col = patches[i].col;
  }
  for (std::size_t rank = 0; rank < n; ++rank) {
    auto& e = m.entries[order[rank]];
    e.split = rank < n_train ? SplitKind::Train : rank < n_train + n_val ? SplitKind::Val : SplitKind::Test;
  }
  return m;
}

Partitions partition(std::vector<Patch> patches, const SplitManifest& manifest) {
  if (manifest.entries.size() != patches.size()) {
    throw DataError("manifest lists " + std::to_string(manifest.entries.size()) + " patches, store holds " +
                    std::to_string(patches.size()));
  }
  std::vector<Patch> buckets[3];
  for (const auto& e : manifest.entries) {
    if (e.patch_id >= patches.size()) throw DataError("manifest patch id out of range");
    buckets[static_cast<std::size_t>(e.split)].push_back(std::move(patches[e.patch_id]));
  }
  return {Partition(SplitKind::Train, std::move(buckets[0])), Partition(SplitKind::Val, std::move(buckets[1])),
          Partition(SplitKind::Test, std::move(buckets[2]))};
}

}  // namespace pyrofocus::data
