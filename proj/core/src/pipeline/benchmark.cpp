#include "pyrofocus/pipeline/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::pipeline {

double speedup_percent(double t_base, double t_new) {
  if (!(t_base > 0.0)) throw ConfigError("speedup needs a positive baseline time");
  return 100.0 * (t_base - t_new) / t_base;
}

void BenchOptions::validate() const {
  if (repeats < 1) throw ConfigError("benchmark repeats must be at least 1");
  if (threads < 1) throw ConfigError("benchmark threads must be at least 1");
  if (batch_size < 1) throw ConfigError("benchmark batch size must be at least 1");
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

struct Accumulator {
  BenchReport report;
  std::vector<StageTimes> repeats;

  void add(const std::vector<PipelineResult>& per_image) {
    StageTimes s;
    for (const auto& r : per_image) {
      s.scale_s += r.times.scale_s;
      s.classify_s += r.times.classify_s;
      s.unet_s += r.times.unet_s;
      s.total_s += r.times.total_s;
    }
    repeats.push_back(s);
  }

  void finish(const std::vector<PipelineResult>& last) {
    auto& b = report;
    b.patches_total = b.patches_routed = 0;
    std::uint64_t h = 0xcbf29ce484222325ull;
    std::size_t fire = 0, missed = 0;
    for (const auto& r : last) {
      b.patches_total += r.routing.patches_total;
      b.patches_routed += r.routing.patches_routed;
      for (std::size_t c = 0; c < 4; ++c) b.predicted_per_class[c] += r.routing.predicted_per_class[c];
      fire += r.routing.fire_pixels;
      missed += r.routing.fire_pixels_missed;
      h = h * 0x100000001b3ull ^ r.prediction_hash();
    }
    b.prediction_hash = h;
    b.gating_miss_rate = fire ? static_cast<double>(missed) / static_cast<double>(fire) : 0.0;
    std::vector<double> totals;
    for (const auto& s : repeats) {
      totals.push_back(s.total_s);
      b.stage_totals_mean.scale_s += s.scale_s;
      b.stage_totals_mean.classify_s += s.classify_s;
      b.stage_totals_mean.unet_s += s.unet_s;
      b.stage_totals_mean.total_s += s.total_s;
    }
    const auto n = static_cast<double>(repeats.size());
    b.stage_totals_mean.scale_s /= n;
    b.stage_totals_mean.classify_s /= n;
    b.stage_totals_mean.unet_s /= n;
    b.stage_totals_mean.total_s /= n;
    b.repeat_totals_s = totals;
    b.total_s_mean = mean(totals);
    b.total_s_median = median(totals);
    const auto images = static_cast<double>(std::max<std::size_t>(1, b.images));
    b.end_to_end_s_mean = b.total_s_mean / images;
    b.end_to_end_s_median = b.total_s_median / images;
    if (b.patches_total) {
      b.per_patch_classify_ms =
          1e3 * (b.stage_totals_mean.scale_s + b.stage_totals_mean.classify_s) / static_cast<double>(b.patches_total);
    }
    if (b.patches_routed) {
      b.per_patch_unet_ms = 1e3 * b.stage_totals_mean.unet_s / static_cast<double>(b.patches_routed);
    }
  }
};

}  // namespace

CostModelFit fit_cost_model(const BenchReport& single, const BenchReport& cascade) {
  CostModelFit f;
  const auto& s = single.stage_totals_mean;
  const auto& c = cascade.stage_totals_mean;
  f.t_cls_s = cascade.patches_total ? (c.scale_s + c.classify_s) / static_cast<double>(cascade.patches_total) : 0.0;
  f.t_unet_s = single.patches_routed ? s.unet_s / static_cast<double>(single.patches_routed) : 0.0;
  f.overhead_s = s.overhead_s();
  f.predicted_s = f.t_cls_s * static_cast<double>(cascade.patches_total) +
                  f.t_unet_s * static_cast<double>(cascade.patches_routed) + f.overhead_s;
  f.measured_s = cascade.total_s_mean;
  f.relative_error = f.measured_s > 0.0 ? std::abs(f.measured_s - f.predicted_s) / f.measured_s : 0.0;
  f.unet_to_cls_ratio = f.t_cls_s > 0.0 ? f.t_unet_s / f.t_cls_s : 0.0;
  return f;
}

std::vector<BenchReport> benchmark(const std::vector<std::vector<data::Patch>>& images,
                                   const data::ScalerParams& scaler, const models::Classifier& classifier,
                                   const models::UNet& unet, const BenchOptions& options) {
  options.validate();
  if (images.empty()) throw DataError("benchmark needs at least one image");
  CascadeConfig cfg;
  cfg.task = options.task;
  cfg.routing = options.routing;
  cfg.threshold = options.threshold;
  cfg.batch_size = options.batch_size;
  cfg.threads = options.threads;
  cfg.validate();

  const auto run_single = [&] {
    std::vector<PipelineResult> out;
    for (const auto& img : images) out.push_back(run_single_stage(img, scaler, unet, cfg));
    return out;
  };
  const auto run_cascade = [&] {
    std::vector<PipelineResult> out;
    for (const auto& img : images) out.push_back(run_pyrofocus(img, scaler, classifier, unet, cfg));
    return out;
  };

  for (std::size_t w = 0; w < options.warmup; ++w) {
    run_single();
    run_cascade();
  }
  Accumulator single, cascade;
  std::vector<PipelineResult> last_single, last_cascade;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    last_single = run_single();
    single.add(last_single);
    last_cascade = run_cascade();
    cascade.add(last_cascade);
  }
  for (auto* a : {&single, &cascade}) {
    a->report.task = options.task;
    a->report.repeats = options.repeats;
    a->report.warmup = options.warmup;
    a->report.threads = options.threads;
    a->report.images = images.size();
    a->report.baseline = "single";
  }
  single.report.pipeline = "single";
  cascade.report.pipeline = "pyrofocus";
  single.finish(last_single);
  cascade.finish(last_cascade);
  single.report.speedup_percent = 0.0;
  cascade.report.speedup_percent = speedup_percent(single.report.total_s_mean, cascade.report.total_s_mean);
  return {single.report, cascade.report};
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["pipeline"] = pipeline;
  j["baseline"] = baseline;
  j["task"] = to_string(task);
  j["repeats"] = repeats;
  j["warmup"] = warmup;
  j["threads"] = threads;
  j["images"] = images;
  j["patches_total"] = patches_total;
  j["patches_routed"] = patches_routed;
  j["predicted_per_class"] = predicted_per_class;
  j["stage_totals_s"] = {{"scale", stage_totals_mean.scale_s},
                         {"classify", stage_totals_mean.classify_s},
                         {"unet", stage_totals_mean.unet_s},
                         {"overhead", stage_totals_mean.overhead_s()},
                         {"total", stage_totals_mean.total_s}};
  j["per_patch_ms"] = {{"classify", per_patch_classify_ms}, {"unet", per_patch_unet_ms}};
  j["end_to_end_s_per_image"] = {{"mean", end_to_end_s_mean}, {"median", end_to_end_s_median}};
  j["total_s"] = {{"mean", total_s_mean}, {"median", total_s_median}};
  j["repeat_totals_s"] = repeat_totals_s;
  j["speedup_percent"] = speedup_percent;
  j["gating_miss_rate"] = gating_miss_rate;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(prediction_hash));
  j["prediction_hash"] = hash;
  return j.dump(2);
}

}  // namespace pyrofocus::pipeline
