#include "pyrofocus/pipeline/cascade.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "pyrofocus/data/binary_io.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/models/training.hpp"

namespace pyrofocus::pipeline {

const char* to_string(Task task) { return task == Task::Segmentation ? "seg" : "frp"; }

Task task_from_string(const std::string& name) {
  if (name == "seg" || name == "segmentation") return Task::Segmentation;
  if (name == "frp") return Task::Frp;
  throw UsageError("unknown task '" + name + "' (expected seg or frp)");
}

void CascadeConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (threads == 0) throw ConfigError("threads must be at least 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("routing threshold must lie in [0,1]");
}

std::uint64_t PipelineResult::prediction_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& o : outputs) {
    h = data::fnv1a({reinterpret_cast<const std::uint8_t*>(o.values.data()), o.values.size() * sizeof(float)}, h);
    h = data::fnv1a(o.mask, h);
  }
  return h;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void check_head(const models::UNet& unet, Task task) {
  const bool seg = unet.spec().head == models::UNetHead::Segmentation;
  if (seg != (task == Task::Segmentation)) {
    throw ConfigError(std::string("U-Net head '") + models::to_string(unet.spec().head) + "' does not match task '" +
                      to_string(task) + "'");
  }
}

/// Runs fn(batch_index) for every batch, distributing whole batches
/// round-robin over `threads` workers. Each batch writes disjoint outputs.
template <typename Fn>
void for_each_batch(std::size_t batches, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || batches <= 1) {
    for (std::size_t b = 0; b < batches; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const auto workers = std::min(threads, batches);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t b = t; b < batches; b += workers) fn(b);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<data::Patch> scaled_copies(std::span<const data::Patch> patches, const data::ScalerParams& scaler) {
  std::vector<data::Patch> out;
  out.reserve(patches.size());
  for (const auto& p : patches) {
    data::Patch q;
    q.scene_id = p.scene_id;
    q.row = p.row;
    q.col = p.col;
    q.height = p.height;
    q.width = p.width;
    q.channels = p.channels;
    q.data = p.data;
    if (q.channels != scaler.channels()) {
      throw IncompatibilityError("patch has " + std::to_string(q.channels) + " bands, scaler expects " +
                                 std::to_string(scaler.channels()));
    }
    data::apply_scaler<float>(scaler, q.data, q.plane_size());
    out.push_back(std::move(q));
  }
  return out;
}

PatchOutput skipped_output(Task task, std::size_t plane) {
  PatchOutput o;
  if (task == Task::Segmentation) {
    o.values.assign(4 * plane, 0.0f);
    std::fill(o.values.begin(), o.values.begin() + static_cast<std::ptrdiff_t>(plane), 1.0f);
    o.mask.assign(plane, 0);
  } else {
    o.values.assign(plane, 0.0f);
  }
  return o;
}

/// U-Net over the listed patch indices, batch by batch, writing outputs[idx].
void run_unet(const std::vector<data::Patch>& scaled, std::span<const std::size_t> indices, const models::UNet& unet,
              const CascadeConfig& cfg, std::vector<PatchOutput>& outputs) {
  const std::size_t batches = (indices.size() + cfg.batch_size - 1) / cfg.batch_size;
  for_each_batch(batches, cfg.threads, [&](std::size_t b) {
    const auto start = b * cfg.batch_size;
    const auto end = std::min(indices.size(), start + cfg.batch_size);
    std::vector<const data::Patch*> ptrs;
    for (auto k = start; k < end; ++k) ptrs.push_back(&scaled[indices[k]]);
    const auto out = unet.infer(models::stack_patches(ptrs));
    const auto v = out.values();
    const std::size_t k_out = out.dim(1), plane = out.dim(2) * out.dim(3), per = k_out * plane;
    for (auto k = start; k < end; ++k) {
      auto& o = outputs[indices[k]];
      const auto s = v.subspan((k - start) * per, per);
      o.values.assign(s.begin(), s.end());
      o.routed = true;
      if (cfg.task == Task::Segmentation) {
        o.mask.assign(plane, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          std::uint8_t arg = 0;
          for (std::uint8_t c = 1; c < k_out; ++c) {
            if (s[c * plane + i] > s[arg * plane + i]) arg = c;
          }
          o.mask[i] = arg;
        }
      } else {
        o.mask.clear();
      }
    }
  });
}

void count_fire_pixels(std::span<const data::Patch> patches, RoutingStats& stats,
                       const std::vector<PatchOutput>& outputs) {
  for (std::size_t i = 0; i < patches.size(); ++i) {
    for (auto c : patches[i].class_mask) {
      if (c == 0) continue;
      ++stats.fire_pixels;
      if (!outputs[i].routed) ++stats.fire_pixels_missed;
    }
  }
}

}  // namespace

PipelineResult run_single_stage(std::span<const data::Patch> patches, const data::ScalerParams& scaler,
                                const models::UNet& unet, const CascadeConfig& config) {
  config.validate();
  check_head(unet, config.task);
  PipelineResult r;
  const auto t0 = Clock::now();

  auto t = Clock::now();
  const auto scaled = scaled_copies(patches, scaler);
  r.times.scale_s = seconds_since(t);

  std::vector<std::size_t> all(patches.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  r.outputs.resize(patches.size());
  t = Clock::now();
  run_unet(scaled, all, unet, config, r.outputs);
  r.times.unet_s = seconds_since(t);

  r.routing.patches_total = patches.size();
  r.routing.patches_routed = patches.size();
  r.routing.unet_invocations = patches.size();
  count_fire_pixels(patches, r.routing, r.outputs);
  r.times.total_s = seconds_since(t0);
  return r;
}

PipelineResult run_pyrofocus(std::span<const data::Patch> patches, const data::ScalerParams& scaler,
                             const models::Classifier& classifier, const models::UNet& unet,
                             const CascadeConfig& config) {
  config.validate();
  check_head(unet, config.task);
  PipelineResult r;
  const auto t0 = Clock::now();

  auto t = Clock::now();
  const auto scaled = scaled_copies(patches, scaler);
  r.times.scale_s = seconds_since(t);

  const std::size_t n = patches.size();
  r.patch_classes.assign(n, 0);
  std::vector<std::uint8_t> route(n, 0);
  t = Clock::now();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  for_each_batch(batches, config.threads, [&](std::size_t b) {
    nn::NoGradGuard guard;
    const auto start = b * config.batch_size;
    const auto end = std::min(n, start + config.batch_size);
    std::vector<const data::Patch*> ptrs;
    for (auto k = start; k < end; ++k) ptrs.push_back(&scaled[k]);
    const auto logits = classifier.forward(models::stack_patches(ptrs), nn::Mode::Eval);
    const auto probs = nn::softmax(logits);
    const auto v = logits.values();
    for (auto k = start; k < end; ++k) {
      const auto row = v.subspan((k - start) * 4, 4);
      const auto arg = static_cast<std::uint8_t>(std::max_element(row.begin(), row.end()) - row.begin());
      r.patch_classes[k] = arg;
      route[k] = config.routing == RoutingMode::Argmax
                     ? (arg != 0)
                     : (1.0 - static_cast<double>(probs[(k - start) * 4]) >= config.threshold);
    }
  });
  r.times.classify_s = seconds_since(t);

  std::vector<std::size_t> routed;
  for (std::size_t i = 0; i < n; ++i) {
    ++r.routing.predicted_per_class[r.patch_classes[i]];
    if (route[i]) routed.push_back(i);
  }
  r.outputs.resize(n);
  t = Clock::now();
  run_unet(scaled, routed, unet, config, r.outputs);
  r.times.unet_s = seconds_since(t);

  const std::size_t plane = n ? patches[0].plane_size() : 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!route[i]) r.outputs[i] = skipped_output(config.task, plane);
  }
  r.routing.patches_total = n;
  r.routing.patches_routed = routed.size();
  r.routing.unet_invocations = routed.size();
  count_fire_pixels(patches, r.routing, r.outputs);
  r.times.total_s = seconds_since(t0);
  return r;
}

std::vector<std::uint8_t> classify_patches(std::span<const data::Patch> patches, const data::ScalerParams& scaler,
                                          const models::Classifier& classifier, const CascadeConfig& config) {
  config.validate();
  const auto& cfg = config;
  const auto scaled = scaled_copies(patches, scaler);
  std::vector<std::uint8_t> classes(patches.size(), 0);
  const std::size_t batches = (patches.size() + cfg.batch_size - 1) / cfg.batch_size;
  for_each_batch(batches, cfg.threads, [&](std::size_t b) {
    nn::NoGradGuard guard;
    const auto start = b * cfg.batch_size;
    const auto end = std::min(patches.size(), start + cfg.batch_size);
    std::vector<const data::Patch*> ptrs;
    for (auto k = start; k < end; ++k) ptrs.push_back(&scaled[k]);
    const auto logits = classifier.forward(models::stack_patches(ptrs), nn::Mode::Eval);
    const auto v = logits.values();
    for (auto k = start; k < end; ++k) {
      const auto row = v.subspan((k - start) * 4, 4);
      classes[k] = static_cast<std::uint8_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
  });
  return classes;
}

ScenePrediction stitch_predictions(std::span<const data::Patch> patches, std::span<const PatchOutput> outputs,
                                   Task task, std::size_t height, std::size_t width) {
  if (patches.size() != outputs.size()) throw DataError("stitch_predictions: patch/output count mismatch");
  ScenePrediction s;
  s.height = height;
  s.width = width;
  if (task == Task::Segmentation) {
    s.mask.assign(height * width, 0);
  } else {
    s.frp.assign(height * width, 0.0f);
  }
  for (std::size_t k = 0; k < patches.size(); ++k) {
    const auto& p = patches[k];
    if (p.row + p.height > height || p.col + p.width > width) {
      throw DataError("patch at (" + std::to_string(p.row) + "," + std::to_string(p.col) + ") exceeds the scene");
    }
    for (std::size_t r = 0; r < p.height; ++r) {
      for (std::size_t c = 0; c < p.width; ++c) {
        const auto dst = (p.row + r) * width + p.col + c;
        const auto src = r * p.width + c;
        if (task == Task::Segmentation) {
          s.mask[dst] = outputs[k].mask[src];
        } else {
          s.frp[dst] = outputs[k].values[src];
        }
      }
    }
  }
  return s;
}

}  // namespace pyrofocus::pipeline
