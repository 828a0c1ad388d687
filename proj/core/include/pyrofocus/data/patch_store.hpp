#pragma once

// Patch store files: "PFPS", u32 version, u32 count, u32 C, u32 H, u32 W,
// then per patch u32 scene_id, u32 row, u32 col, u8 label, C*H*W f32 data,
// H*W u8 class mask, H*W f32 FRP.

#include <filesystem>

#include "pyrofocus/data/split.hpp"

namespace pyrofocus::data {

inline constexpr std::uint32_t kPatchStoreVersion = 1;

void save_partition(const Partition& partition, const std::filesystem::path& path);
Partition load_partition(const std::filesystem::path& path, SplitKind kind);

}  // namespace pyrofocus::data
