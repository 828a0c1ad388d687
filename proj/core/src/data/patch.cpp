#include "pyrofocus/data/patch.hpp"

#include <algorithm>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::data {

FireClass patch_label(std::span<const std::uint8_t> mask) {
  std::uint8_t worst = 0;
  for (auto v : mask) worst = std::max(worst, v);
  return static_cast<FireClass>(worst);
}

Tiling patchify(const Scene& scene, std::uint32_t scene_id, std::size_t ph, std::size_t pw) {
  if (ph == 0 || pw == 0) throw ConfigError("patch dimensions must be positive");
  if (scene.height < ph || scene.width < pw) {
    throw DataError("scene " + std::to_string(scene.height) + "x" + std::to_string(scene.width) +
                    " is smaller than one " + std::to_string(ph) + "x" + std::to_string(pw) + " patch");
  }
  Tiling t;
  t.grid_rows = scene.height / ph;
  t.grid_cols = scene.width / pw;
  t.height = t.grid_rows * ph;
  t.width = t.grid_cols * pw;
  t.cropped_rows = scene.height - t.height;
  t.cropped_cols = scene.width - t.width;
  const auto channels = scene.channels();
  t.patches.reserve(t.grid_rows * t.grid_cols);
  for (std::size_t gr = 0; gr < t.grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < t.grid_cols; ++gc) {
      Patch p;
      p.scene_id = scene_id;
      p.row = gr * ph;
      p.col = gc * pw;
      p.height = ph;
      p.width = pw;
      p.channels = channels;
      p.data.resize(channels * ph * pw);
      p.class_mask.assign(ph * pw, 0);
      p.frp.assign(ph * pw, 0.0f);
      for (std::size_t c = 0; c < channels; ++c) {
        const auto band = scene.band(c);
        for (std::size_t r = 0; r < ph; ++r) {
          std::copy_n(band.data() + (p.row + r) * scene.width + p.col, pw, p.data.data() + (c * ph + r) * pw);
        }
      }
      for (std::size_t r = 0; r < ph; ++r) {
        const auto src = (p.row + r) * scene.width + p.col;
        if (scene.class_mask) std::copy_n(scene.class_mask->data() + src, pw, p.class_mask.data() + r * pw);
        if (scene.frp) std::copy_n(scene.frp->data() + src, pw, p.frp.data() + r * pw);
      }
      p.label = patch_label(p.class_mask);
      t.patches.push_back(std::move(p));
    }
  }
  return t;
}

StitchedPlanes stitch(std::span<const Patch> patches, std::size_t height, std::size_t width, std::size_t channels) {
  StitchedPlanes out;
  out.height = height;
  out.width = width;
  out.channels = channels;
  out.bands.assign(channels * height * width, 0.0f);
  out.class_mask.assign(height * width, 0);
  out.frp.assign(height * width, 0.0f);
  for (const auto& p : patches) {
    if (p.channels != channels) throw DataError("patch channel count does not match stitch target");
    if (p.row + p.height > height || p.col + p.width > width) {
      throw DataError("patch at (" + std::to_string(p.row) + "," + std::to_string(p.col) + ") exceeds stitch extent");
    }
    for (std::size_t r = 0; r < p.height; ++r) {
      const auto dst = (p.row + r) * width + p.col;
      for (std::size_t c = 0; c < channels; ++c) {
        std::copy_n(p.data.data() + (c * p.height + r) * p.width, p.width, out.bands.data() + c * height * width + dst);
      }
      std::copy_n(p.class_mask.data() + r * p.width, p.width, out.class_mask.data() + dst);
      std::copy_n(p.frp.data() + r * p.width, p.width, out.frp.data() + dst);
    }
  }
  return out;
}

}  // namespace pyrofocus::data
