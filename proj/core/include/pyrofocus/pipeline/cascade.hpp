#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/data/scaler.hpp"
#include "pyrofocus/models/classifier.hpp"
#include "pyrofocus/models/unet.hpp"

namespace pyrofocus::pipeline {

enum class Task { Segmentation, Frp };
const char* to_string(Task task);
Task task_from_string(const std::string& name);  // "seg"/"segmentation" or "frp"

enum class RoutingMode { Argmax, Threshold };

struct CascadeConfig {
  Task task = Task::Segmentation;
  /// Argmax routes patches whose predicted class is a fire class. Threshold
  /// routes when 1 - P(NoFire) >= threshold.
  RoutingMode routing = RoutingMode::Argmax;
  double threshold = 0.5;
  std::size_t batch_size = 64;
  std::size_t threads = 1;

  /// Throws ConfigError for batch_size/threads of 0 or threshold outside [0,1].
  void validate() const;
};

/// One patch's prediction. Segmentation: `values` holds class probabilities
/// [4,H,W] and `mask` their argmax. FRP: `values` holds the clamped
/// normalized FRP [H,W] and `mask` is empty. A skipped patch is exactly
/// NoFire (probability 1 on class 0) or exactly zero.
struct PatchOutput {
  std::vector<float> values;
  std::vector<std::uint8_t> mask;
  bool routed = false;

  bool operator==(const PatchOutput&) const = default;
};

struct StageTimes {
  double scale_s = 0.0;     // copying and scaling patch data
  double classify_s = 0.0;  // stage 1 inference
  double unet_s = 0.0;      // stage 2 inference
  double total_s = 0.0;     // end to end; >= the sum of the stages
  double overhead_s() const { return total_s - scale_s - classify_s - unet_s; }
};

struct RoutingStats {
  std::size_t patches_total = 0;
  std::size_t patches_routed = 0;
  std::size_t unet_invocations = 0;  // patches passed through the U-Net
  std::array<std::size_t, 4> predicted_per_class{};
  std::size_t fire_pixels = 0;         // ground-truth fire pixels over all patches
  std::size_t fire_pixels_missed = 0;  // ...inside skipped patches
  double gating_miss_rate() const {
    return fire_pixels ? static_cast<double>(fire_pixels_missed) / static_cast<double>(fire_pixels) : 0.0;
  }
};

struct PipelineResult {
  std::vector<PatchOutput> outputs;         // parallel to the input patches
  std::vector<std::uint8_t> patch_classes;  // stage-1 predictions (cascade only)
  RoutingStats routing;
  StageTimes times;

  /// FNV-1a over all output values and masks, for reproducibility checks.
  std::uint64_t prediction_hash() const;
};

/// Runs every patch through the U-Net. Patches hold raw (unscaled) radiance;
/// the scaler is applied inside the timed region. Throws ConfigError when the
/// U-Net head does not match the task.
PipelineResult run_single_stage(std::span<const data::Patch> patches, const data::ScalerParams& scaler,
                                const models::UNet& unet, const CascadeConfig& config);

/// Classifies every patch, then runs the U-Net on routed patches only.
PipelineResult run_pyrofocus(std::span<const data::Patch> patches, const data::ScalerParams& scaler,
                             const models::Classifier& classifier, const models::UNet& unet,
                             const CascadeConfig& config);

/// Stage 1 only: scaled, batched classification. Returns one class per patch.
std::vector<std::uint8_t> classify_patches(std::span<const data::Patch> patches, const data::ScalerParams& scaler,
                                          const models::Classifier& classifier, const CascadeConfig& config);

struct ScenePrediction {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;  // segmentation
  std::vector<float> frp;          // FRP task (normalized units)
};

/// Places each patch output at its origin (no blending). Pixels outside every
/// patch stay NoFire / 0.
ScenePrediction stitch_predictions(std::span<const data::Patch> patches, std::span<const PatchOutput> outputs,
                                   Task task, std::size_t height, std::size_t width);

}  // namespace pyrofocus::pipeline
