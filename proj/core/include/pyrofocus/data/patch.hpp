#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pyrofocus/data/scene.hpp"

namespace pyrofocus::data {

inline constexpr std::size_t kPatchHeight = 24;
inline constexpr std::size_t kPatchWidth = 64;

/// A window of a scene. Band data is channel-major (C planes of H*W) so a
/// batch of patches maps directly onto an [N,C,H,W] tensor.
struct Patch {
  std::uint32_t scene_id = 0;
  std::size_t row = 0;  // origin in the parent scene
  std::size_t col = 0;
  std::size_t height = kPatchHeight;
  std::size_t width = kPatchWidth;
  std::size_t channels = 0;
  std::vector<float> data;               // C*H*W
  std::vector<std::uint8_t> class_mask;  // H*W FireClass codes (zeros when the scene has none)
  std::vector<float> frp;                // H*W (zeros when the scene has none)
  FireClass label = FireClass::NoFire;

  std::size_t plane_size() const { return height * width; }
};

/// Maximum severity present in a mask.
FireClass patch_label(std::span<const std::uint8_t> mask);

struct Tiling {
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::size_t height = 0;  // cropped extent covered by the grid
  std::size_t width = 0;
  std::size_t cropped_rows = 0;  // remainder discarded at the bottom
  std::size_t cropped_cols = 0;  // remainder discarded at the right
  std::vector<Patch> patches;    // row-major over the grid
};

/// Non-overlapping row-major tiling of the largest top-left sub-scene whose
/// dimensions are multiples of the patch size. Throws DataError when the
/// scene is smaller than one patch.
Tiling patchify(const Scene& scene, std::uint32_t scene_id = 0, std::size_t patch_height = kPatchHeight,
                std::size_t patch_width = kPatchWidth);

struct StitchedPlanes {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> bands;
  std::vector<std::uint8_t> class_mask;
  std::vector<float> frp;
};

/// Places each patch at its origin. Throws DataError when a patch falls
/// outside the target extent or channel counts disagree.
StitchedPlanes stitch(std::span<const Patch> patches, std::size_t height, std::size_t width,
                      std::size_t channels);

}  // namespace pyrofocus::data
