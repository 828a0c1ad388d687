#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pyrofocus/pipeline/cascade.hpp"

namespace pyrofocus::pipeline {

/// 100 * (t_base - t_new) / t_base. Throws ConfigError for t_base <= 0.
double speedup_percent(double t_base, double t_new);

struct BenchOptions {
  std::size_t repeats = 10;
  std::size_t warmup = 2;
  std::size_t threads = 1;
  std::size_t batch_size = 64;
  Task task = Task::Segmentation;
  RoutingMode routing = RoutingMode::Argmax;
  double threshold = 0.5;

  /// Throws ConfigError for repeats < 1.
  void validate() const;
};

struct BenchReport {
  std::string pipeline;  // "single" or "pyrofocus"
  std::string baseline;  // pipeline the speedup is measured against
  Task task = Task::Segmentation;
  std::size_t repeats = 0;
  std::size_t warmup = 0;
  std::size_t threads = 1;
  std::size_t images = 0;
  std::size_t patches_total = 0;
  std::size_t patches_routed = 0;
  std::array<std::size_t, 4> predicted_per_class{};
  // Means over repeats, summed over images.
  StageTimes stage_totals_mean;
  double per_patch_classify_ms = 0.0;  // (scale + classify) / patches_total
  double per_patch_unet_ms = 0.0;      // unet / patches_routed
  double end_to_end_s_mean = 0.0;      // per image
  double end_to_end_s_median = 0.0;    // per image
  double total_s_mean = 0.0;           // all images, per repeat
  double total_s_median = 0.0;
  double speedup_percent = 0.0;  // from the means
  double gating_miss_rate = 0.0;
  std::uint64_t prediction_hash = 0;
  std::vector<double> repeat_totals_s;

  std::string to_json() const;
};

/// Cost-model check for a cascade: t_cls * N + t_unet * N_routed + overhead,
/// where t_cls is the cascade's per-patch stage-1 time, t_unet the
/// single-stage per-patch U-Net time, and overhead the single-stage time
/// outside its stages. All quantities are per repeat over all images.
struct CostModelFit {
  double t_cls_s = 0.0;
  double t_unet_s = 0.0;
  double overhead_s = 0.0;
  double predicted_s = 0.0;
  double measured_s = 0.0;
  double relative_error = 0.0;  // |measured - predicted| / measured
  double unet_to_cls_ratio = 0.0;
};

CostModelFit fit_cost_model(const BenchReport& single, const BenchReport& cascade);

/// Times the single-stage baseline and the cascade over preloaded images
/// (each a list of raw patches). Warmup runs are discarded; each repeat runs
/// both pipelines back to back over every image. Returns {single, pyrofocus}.
std::vector<BenchReport> benchmark(const std::vector<std::vector<data::Patch>>& images,
                                   const data::ScalerParams& scaler, const models::Classifier& classifier,
                                   const models::UNet& unet, const BenchOptions& options);

}  // namespace pyrofocus::pipeline
