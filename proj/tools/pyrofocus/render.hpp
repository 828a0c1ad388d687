#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pyrofocus/data/scene.hpp"

namespace pyrofocus::cli {

struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
  std::vector<std::string> comments;

  std::array<std::uint8_t, 3> at(std::size_t r, std::size_t c) const {
    const auto* p = &rgb[(r * width + c) * 3];
    return {p[0], p[1], p[2]};
  }
};

/// Class palette; NoFire has no colour (the base shows through).
inline constexpr std::array<std::array<std::uint8_t, 3>, 4> kClassPalette{{
    {0, 0, 0},
    {255, 255, 0},  // Smoldering
    {255, 128, 0},  // Flaming
    {255, 0, 0},    // Saturated
}};

/// False-colour composite of the 2.16 / 3.755 / 11.33 um bands (or the
/// first / middle / last band when absent) over the top-left height x width
/// region. Each channel is stretched from its 2nd to 98th percentile onto
/// 0..254, so the red channel never reaches 255 and palette colours stay
/// distinguishable from the base.
Image base_composite(const data::Scene& scene, std::size_t height, std::size_t width);

/// Paints fire classes onto a copy of `base`.
Image class_overlay(const Image& base, std::span<const std::uint8_t> mask);

/// Recovers the class mask from an overlay (any pixel with red 255 is decoded
/// by its green level; all others are NoFire).
std::vector<std::uint8_t> decode_class_overlay(const Image& overlay);

/// White-to-red ramp on pixels with FRP > 0, scaled by the image maximum; the
/// maximum in MW is recorded as a header comment.
Image frp_overlay(const Image& base, std::span<const float> frp_mw);

/// Swatch strip: one block per class (NoFire in mid gray).
Image class_legend();
/// Ramp strip from 0 to max FRP.
Image frp_legend(float max_mw);

void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

}  // namespace pyrofocus::cli
