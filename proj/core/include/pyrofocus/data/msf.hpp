#pragma once

// MSF scene files: "MSF1", then little-endian u32 H, W, C, flags
// (bit0 FRP, bit1 class mask, bit2 geolocation), C f32 wavelengths, C band
// planes of H*W f32, optional FRP plane (f32), optional class mask (u8),
// optional latitude and longitude planes (f64).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pyrofocus/data/scene.hpp"

namespace pyrofocus::data {

inline constexpr char kMsfMagic[4] = {'M', 'S', 'F', '1'};

enum MsfFlags : std::uint32_t {
  kMsfHasFrp = 1u << 0,
  kMsfHasClassMask = 1u << 1,
  kMsfHasGeolocation = 1u << 2,
};

std::vector<std::uint8_t> encode_scene(const Scene& scene);
/// Throws FormatError (with byte offset) on bad magic, truncation or size overflow.
Scene decode_scene(std::span<const std::uint8_t> bytes);

void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

}  // namespace pyrofocus::data
