#include "pyrofocus/data/augment.hpp"

#include <random>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::data {

namespace {

template <typename T>
void flip_plane(const T* src, T* dst, std::size_t h, std::size_t w, bool horizontal) {
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const auto sr = horizontal ? r : h - 1 - r;
      const auto sc = horizontal ? w - 1 - c : c;
      dst[r * w + c] = src[sr * w + sc];
    }
  }
}

}  // namespace

Patch flip_patch(const Patch& patch, bool horizontal) {
  Patch out = patch;
  const auto h = patch.height, w = patch.width, plane = patch.plane_size();
  for (std::size_t c = 0; c < patch.channels; ++c) {
    flip_plane(patch.data.data() + c * plane, out.data.data() + c * plane, h, w, horizontal);
  }
  flip_plane(patch.class_mask.data(), out.class_mask.data(), h, w, horizontal);
  flip_plane(patch.frp.data(), out.frp.data(), h, w, horizontal);
  return out;
}

std::size_t augment(Partition& train, const ScalerParams& scaler, const AugmentOptions& options) {
  if (train.kind() != SplitKind::Train) {
    throw UsageError(std::string("augmentation applies to the training split only, got ") + to_string(train.kind()));
  }
  std::mt19937_64 rng(options.seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto& patches = train.patches();
  const auto original = patches.size();
  std::size_t added = 0;
  for (std::size_t i = 0; i < original; ++i) {
    if (!is_fire(patches[i].label)) continue;
    const bool horizontal = coin(rng);
    Patch copy = flip_patch(patches[i], horizontal);
    const auto plane = copy.plane_size();
    for (std::size_t c = 0; c < copy.channels; ++c) {
      // Scaled range is 1 for live bands and 0 for degenerate ones.
      const double sigma = (c < scaler.channels() && scaler.degenerate[c]) ? 0.0 : options.noise_fraction;
      for (std::size_t k = 0; k < plane; ++k) {
        copy.data[c * plane + k] += static_cast<float>(sigma * gauss(rng));
      }
    }
    patches.push_back(std::move(copy));
    ++added;
  }
  return added;
}

}  // namespace pyrofocus::data
