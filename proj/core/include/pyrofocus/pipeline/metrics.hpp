#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pyrofocus::pipeline {

struct ConfusionMatrix {
  std::size_t classes = 4;
  std::vector<std::uint64_t> counts;  // classes x classes, [label][prediction]
  std::vector<double> normalized;     // row-normalized; zero-support rows are all 0
  std::vector<bool> zero_support;     // per label row

  std::uint64_t count(std::size_t label, std::size_t pred) const { return counts[label * classes + pred]; }
  std::uint64_t total() const;
  double accuracy() const;
  /// 0 when the class was never predicted / never present.
  double precision(std::size_t c) const;
  double recall(std::size_t c) const;
  double f1(std::size_t c) const;
};

/// Throws DataError on a length mismatch and LabelError for codes >= classes.
ConfusionMatrix confusion_matrix(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels,
                                 std::size_t classes = 4);

/// Mean IoU over classes present in either mask. Throws DataError for empty
/// or mismatched masks and LabelError for codes >= classes.
double miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, std::size_t classes = 4);

struct MaskedMae {
  double value = 0.0;
  std::size_t pixels = 0;
  bool empty_mask = true;
};

/// MAE over pixels with mask != 0; 0 with empty_mask set when there are none.
/// Throws DataError on size mismatch.
MaskedMae masked_mae(std::span<const float> pred, std::span<const float> truth, std::span<const std::uint8_t> mask);

struct EvalMetrics {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::vector<double> precision, recall, f1;
  double miou = 0.0;
  MaskedMae mae;
  double false_positive_rate = 0.0;  // fraction of NoFire pixels predicted as fire
  bool has_segmentation = false;
  bool has_frp = false;

  std::string to_json() const;
};

/// Patch-level classification metrics.
EvalMetrics classification_metrics(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels);
/// Pixel-level segmentation metrics (confusion over pixels, MIoU, FP rate).
EvalMetrics segmentation_metrics(std::span<const std::uint8_t> pred_mask, std::span<const std::uint8_t> true_mask);
/// FRP metrics; the fire mask is true_mask != NoFire. A NoFire pixel counts
/// as a false positive when its prediction is > 0.
EvalMetrics frp_metrics(std::span<const float> pred, std::span<const float> truth,
                        std::span<const std::uint8_t> true_mask);

}  // namespace pyrofocus::pipeline
