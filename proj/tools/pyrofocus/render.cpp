#include "render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pyrofocus/data/binary_io.hpp"
#include "pyrofocus/errors.hpp"

namespace pyrofocus::cli {

namespace {

std::size_t pick_band(const data::Scene& scene, double wavelength, std::size_t fallback) {
  const auto b = data::find_band(scene.wavelengths, wavelength);
  return b ? *b : fallback;
}

float percentile(std::vector<float> v, double q) {
  const auto k = static_cast<std::size_t>(std::llround(q * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

Image base_composite(const data::Scene& scene, std::size_t height, std::size_t width) {
  if (height > scene.height || width > scene.width || height == 0 || width == 0) {
    throw DataError("composite region exceeds the scene");
  }
  const auto c = scene.channels();
  const std::size_t bands[3] = {pick_band(scene, 2.160, 0), pick_band(scene, 3.755, c / 2),
                                pick_band(scene, 11.330, c - 1)};
  Image img;
  img.height = height;
  img.width = width;
  img.rgb.assign(height * width * 3, 0);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto plane = scene.band(bands[k]);
    std::vector<float> region;
    region.reserve(height * width);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t col = 0; col < width; ++col) region.push_back(plane[r * scene.width + col]);
    }
    const float lo = percentile(region, 0.02), hi = percentile(region, 0.98);
    const double span = hi > lo ? static_cast<double>(hi) - lo : 1.0;
    for (std::size_t i = 0; i < region.size(); ++i) {
      const double t = std::clamp((static_cast<double>(region[i]) - lo) / span, 0.0, 1.0);
      img.rgb[i * 3 + k] = static_cast<std::uint8_t>(std::lround(t * 254.0));
    }
  }
  return img;
}

Image class_overlay(const Image& base, std::span<const std::uint8_t> mask) {
  if (mask.size() != base.height * base.width) throw DimensionError("class mask does not match the image");
  Image out = base;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) continue;
    if (mask[i] > 3) throw LabelError("class code " + std::to_string(mask[i]) + " outside [0,4)");
    std::copy(kClassPalette[mask[i]].begin(), kClassPalette[mask[i]].end(), out.rgb.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
  return out;
}

std::vector<std::uint8_t> decode_class_overlay(const Image& overlay) {
  std::vector<std::uint8_t> mask(overlay.height * overlay.width, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto* p = &overlay.rgb[i * 3];
    if (p[0] != 255) continue;
    for (std::uint8_t k = 1; k < 4; ++k) {
      if (p[1] == kClassPalette[k][1] && p[2] == kClassPalette[k][2]) mask[i] = k;
    }
  }
  return mask;
}

Image frp_overlay(const Image& base, std::span<const float> frp_mw) {
  if (frp_mw.size() != base.height * base.width) throw DimensionError("FRP plane does not match the image");
  Image out = base;
  float peak = 0.0f;
  for (auto v : frp_mw) peak = std::max(peak, v);
  for (std::size_t i = 0; i < frp_mw.size(); ++i) {
    if (!(frp_mw[i] > 0.0f)) continue;
    const auto level = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - frp_mw[i] / peak)));
    out.rgb[i * 3] = 255;
    out.rgb[i * 3 + 1] = level;
    out.rgb[i * 3 + 2] = level;
  }
  char note[64];
  std::snprintf(note, sizeof note, "max_frp_mw=%.6g", static_cast<double>(peak));
  out.comments.push_back(note);
  return out;
}

Image class_legend() {
  constexpr std::size_t block = 16;
  Image img;
  img.height = block;
  img.width = block * 4;
  img.rgb.resize(img.height * img.width * 3);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const auto k = c / block;
      const std::array<std::uint8_t, 3> color = k == 0 ? std::array<std::uint8_t, 3>{128, 128, 128} : kClassPalette[k];
      std::copy(color.begin(), color.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>((r * img.width + c) * 3));
    }
  }
  img.comments = {"classes: NoFire Smoldering Flaming Saturated"};
  return img;
}

Image frp_legend(float max_mw) {
  Image img;
  img.height = 16;
  img.width = 256;
  img.rgb.resize(img.height * img.width * 3);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const auto level = static_cast<std::uint8_t>(255 - c);
      auto* p = &img.rgb[(r * img.width + c) * 3];
      p[0] = 255;
      p[1] = level;
      p[2] = level;
    }
  }
  char note[64];
  std::snprintf(note, sizeof note, "frp ramp 0..%.6g MW", static_cast<double>(max_mw));
  img.comments.push_back(note);
  return img;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  std::ostringstream head;
  head << "P6\n";
  for (const auto& c : image.comments) head << "# " << c << '\n';
  head << image.width << ' ' << image.height << "\n255\n";
  const auto h = head.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  bytes.insert(bytes.end(), image.rgb.begin(), image.rgb.end());
  data::write_file(path, bytes);
}

Image read_ppm(const std::filesystem::path& path) {
  const auto bytes = data::read_file(path);
  std::size_t pos = 0;
  const auto token = [&]() {
    std::string t;
    while (pos < bytes.size()) {
      const char ch = static_cast<char>(bytes[pos]);
      if (ch == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty()) break;
        ++pos;
      } else {
        t += ch;
        ++pos;
      }
    }
    return t;
  };
  if (token() != "P6") throw FormatError("not a binary PPM", 0);
  Image img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    if (token() != "255") throw FormatError("unsupported PPM depth", pos);
  } catch (const std::logic_error&) {
    throw FormatError("malformed PPM header", pos);
  }
  ++pos;  // single whitespace after maxval
  const auto n = img.width * img.height * 3;
  if (bytes.size() - pos != n) throw FormatError("PPM pixel data has the wrong size", pos);
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

}  // namespace pyrofocus::cli
