#include <cmath>
#include <cstdio>

#include "commands.hpp"
#include "common.hpp"
#include "pyrofocus/data/msf.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/pipeline/cascade.hpp"
#include "pyrofocus/pipeline/report.hpp"
#include "render.hpp"

namespace pyrofocus::cli {

namespace {

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) { return fs::path(prefix.string() + suffix); }

void check_bands(const data::Scene& scene, const models::Checkpoint& c, const fs::path& path) {
  if (c.wavelengths.empty()) return;
  bool same = c.wavelengths.size() == scene.wavelengths.size();
  for (std::size_t i = 0; same && i < c.wavelengths.size(); ++i) {
    same = std::abs(c.wavelengths[i] - scene.wavelengths[i]) < 1e-3f;
  }
  if (!same) {
    throw IncompatibilityError("scene band set (" + std::to_string(scene.wavelengths.size()) +
                               " bands) does not match checkpoint " + path.string());
  }
}

/// Writes PREFIX_base.ppm, PREFIX_overlay.ppm and PREFIX_legend.ppm.
void render_outputs(const data::Scene& scene, const data::Scene& prediction, pipeline::Task task,
                    const fs::path& prefix) {
  const auto base = base_composite(scene, prediction.height, prediction.width);
  write_ppm(base, with_suffix(prefix, "_base.ppm"));
  if (task == pipeline::Task::Segmentation) {
    if (!prediction.class_mask) throw DataError("prediction has no class mask plane");
    write_ppm(class_overlay(base, *prediction.class_mask), with_suffix(prefix, "_overlay.ppm"));
    write_ppm(class_legend(), with_suffix(prefix, "_legend.ppm"));
  } else {
    if (!prediction.frp) throw DataError("prediction has no FRP plane");
    const auto overlay = frp_overlay(base, *prediction.frp);
    write_ppm(overlay, with_suffix(prefix, "_overlay.ppm"));
    float peak = 0.0f;
    for (auto v : *prediction.frp) peak = std::max(peak, v);
    write_ppm(frp_legend(peak), with_suffix(prefix, "_legend.ppm"));
  }
}

}  // namespace

void cmd_infer(const InferOptions& o) {
  const auto task = pipeline::task_from_string(o.task);
  if (!fs::exists(o.scene)) throw MissingInputError("scene not found: " + o.scene.string());
  const auto scene = data::load_scene(o.scene);
  const auto cls_ckpt = load_checked_checkpoint(o.classifier, nullptr);
  const auto unet_ckpt = load_checked_checkpoint(o.unet, &cls_ckpt.scaler);
  check_bands(scene, cls_ckpt, o.classifier);
  check_bands(scene, unet_ckpt, o.unet);
  if (scene.channels() != cls_ckpt.scaler.channels()) {
    throw IncompatibilityError("scene has " + std::to_string(scene.channels()) + " bands, checkpoint scaler expects " +
                               std::to_string(cls_ckpt.scaler.channels()));
  }
  const auto classifier = models::load_classifier(cls_ckpt);
  const auto unet = models::load_unet(unet_ckpt);

  const auto tiling = data::patchify(scene);
  pipeline::CascadeConfig cfg;
  cfg.task = task;
  cfg.threads = o.threads;
  const auto result = pipeline::run_pyrofocus(tiling.patches, cls_ckpt.scaler, classifier, unet, cfg);
  const auto planes = pipeline::stitch_predictions(tiling.patches, result.outputs, task, tiling.height, tiling.width);

  // Prediction scene: geolocation of the cropped region plus one band holding
  // the class codes (segmentation) or FRP in MW.
  auto pred = data::crop(scene, tiling.height, tiling.width);
  pred.wavelengths = {static_cast<float>(data::kMwirWavelength)};
  pred.bands.assign(tiling.height * tiling.width, 0.0f);
  pred.class_mask.reset();
  pred.frp.reset();
  if (task == pipeline::Task::Segmentation) {
    pred.class_mask = planes.mask;
    for (std::size_t i = 0; i < planes.mask.size(); ++i) pred.bands[i] = planes.mask[i];
  } else {
    std::vector<float> mw(planes.frp.size(), 0.0f);
    for (std::size_t i = 0; i < mw.size(); ++i) {
      if (planes.frp[i] > 0.0f) mw[i] = std::max(0.0f, data::unscale_frp(cls_ckpt.scaler, planes.frp[i]));
    }
    pred.bands = mw;
    pred.frp = std::move(mw);
  }
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  data::save_scene(pred, with_suffix(o.out, "_pred.msf"));
  render_outputs(scene, pred, task, o.out);

  Json echo;
  echo["scene"] = o.scene.string();
  echo["classifier"] = o.classifier.string();
  echo["unet"] = o.unet.string();
  echo["task"] = pipeline::to_string(task);
  echo["threads"] = o.threads;
  echo["out"] = o.out.string();
  echo["cropped"] = {tiling.height, tiling.width};
  echo["patches_total"] = result.routing.patches_total;
  echo["patches_routed"] = result.routing.patches_routed;
  echo["prediction_hash"] = hex64(result.prediction_hash());
  write_config_echo(with_suffix(o.out, "_config.json"), "infer", echo);
  std::printf("routed %zu/%zu patches; wrote %s_pred.msf and overlays\n", result.routing.patches_routed,
              result.routing.patches_total, o.out.string().c_str());
}

void cmd_render(const RenderOptions& o) {
  const auto task = pipeline::task_from_string(o.task);
  for (const auto& p : {o.scene, o.prediction}) {
    if (!fs::exists(p)) throw MissingInputError("input not found: " + p.string());
  }
  const auto scene = data::load_scene(o.scene);
  const auto pred = data::load_scene(o.prediction);
  if (pred.height > scene.height || pred.width > scene.width) {
    throw IncompatibilityError("prediction is larger than the scene");
  }
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  render_outputs(scene, pred, task, o.out);
  Json echo;
  echo["scene"] = o.scene.string();
  echo["prediction"] = o.prediction.string();
  echo["task"] = pipeline::to_string(task);
  echo["out"] = o.out.string();
  write_config_echo(with_suffix(o.out, "_config.json"), "render", echo);
}

}  // namespace pyrofocus::cli
