#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "pyrofocus/data/scaler.hpp"
#include "pyrofocus/data/split.hpp"
#include "pyrofocus/models/checkpoint.hpp"
#include "pyrofocus/models/classifier.hpp"
#include "pyrofocus/models/losses.hpp"
#include "pyrofocus/models/unet.hpp"

namespace pyrofocus::models {

struct TrainOptions {
  int epochs = 30;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  FrpLossConfig frp_loss;
  std::function<void(const HistoryRecord&)> on_epoch;  // progress callback, optional

  static TrainOptions classifier_defaults() { return {}; }
  static TrainOptions unet_defaults() {
    TrainOptions o;
    o.batch_size = 32;
    return o;
  }
};

/// Stacks patch band data into [N, C, H, W]. Throws DataError when patches
/// disagree in shape or the list is empty.
FTensor stack_patches(std::span<const data::Patch* const> patches);

/// Adam training on scaled partitions (the scaler is recorded, not applied).
/// Per epoch: seeded shuffle, train-mode mini-batches, then eval-mode
/// validation. The returned checkpoint carries the parameters of the epoch
/// with the lowest validation loss (earliest on ties) and the full history.
/// Validation metric: accuracy. Throws DataError for an empty split and
/// ConfigError for epochs < 1 or batch_size < 1.
Checkpoint train_classifier(const data::Partition& train, const data::Partition& val, const ClassifierSpec& spec,
                            const data::ScalerParams& scaler, const TrainOptions& options);

/// As train_classifier. Segmentation uses pixel-wise cross-entropy and
/// reports pixel accuracy; FRP uses frp_loss on normalized targets with the
/// fire mask class_mask != NoFire and reports masked MAE. Auxiliary outputs
/// at 1/2^k scale are weighted 0.5^k against downsampled targets.
Checkpoint train_unet(const data::Partition& train, const data::Partition& val, const UNetSpec& spec,
                      const data::ScalerParams& scaler, const TrainOptions& options);

}  // namespace pyrofocus::models
