#pragma once

#include <cstdint>

#include "pyrofocus/data/scaler.hpp"
#include "pyrofocus/data/split.hpp"

namespace pyrofocus::data {

struct AugmentOptions {
  double noise_fraction = 0.01;  // Gaussian sigma as a fraction of each band's scaled range
  std::uint64_t seed = 0;
};

/// Appends one flipped, noised copy of every fire-labelled patch of the
/// (already scaled) training partition. The flip axis is drawn uniformly;
/// data, class mask and FRP flip together and noise touches band data only.
/// Returns the number of copies added. Throws UsageError for val/test.
std::size_t augment(Partition& train, const ScalerParams& scaler, const AugmentOptions& options = {});

/// Row reversal (vertical flip) or column reversal (horizontal flip) of all planes.
Patch flip_patch(const Patch& patch, bool horizontal);

}  // namespace pyrofocus::data
