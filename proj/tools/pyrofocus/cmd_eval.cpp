#include <algorithm>
#include <cstdio>

#include "commands.hpp"
#include "common.hpp"
#include "pyrofocus/data/patch_store.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/pipeline/benchmark.hpp"
#include "pyrofocus/pipeline/cascade.hpp"
#include "pyrofocus/pipeline/metrics.hpp"
#include "pyrofocus/pipeline/report.hpp"

namespace pyrofocus::cli {

namespace {

/// Scene ids ranked by ground-truth fire pixels (descending, ties by id).
std::vector<std::uint32_t> rank_by_fire(const RawDataset& raw, const std::vector<std::uint32_t>& ids) {
  std::vector<std::pair<std::size_t, std::uint32_t>> scored;
  for (auto id : ids) {
    std::size_t fire = 0;
    const auto& s = raw.scenes[id];
    if (s.class_mask) {
      for (auto c : *s.class_mask) fire += c != 0 ? 1 : 0;
    }
    scored.emplace_back(fire, id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::uint32_t> out;
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

data::Partitions raw_partitions(const PreparedDataset& ds, RawDataset& raw) {
  const auto manifest = data::SplitManifest::load(ds.paths.split());
  if (manifest.entries.size() != raw.patches.size()) {
    throw IncompatibilityError("split lists " + std::to_string(manifest.entries.size()) + " patches but the source has " +
                               std::to_string(raw.patches.size()));
  }
  return data::partition(raw.patches, manifest);
}

}  // namespace

void cmd_eval(const EvalOptions& o) {
  const auto task = pipeline::task_from_string(o.task);
  const auto ds = load_prepared(o.data);
  auto raw = load_raw_dataset(ds.source);
  auto parts = raw_partitions(ds, raw);
  const auto& test = parts.test.patches();

  const auto classifier = models::load_classifier(load_checked_checkpoint(o.classifier, &ds.scaler));
  pipeline::CascadeConfig cfg;
  cfg.task = task;
  cfg.threads = o.threads;

  Json out;
  out["split"] = "test";
  out["patches"] = test.size();
  std::vector<std::uint8_t> labels;
  for (const auto& p : test) labels.push_back(static_cast<std::uint8_t>(p.label));

  if (!o.unet) {
    const auto preds = pipeline::classify_patches(test, ds.scaler, classifier, cfg);
    out["classification"] = Json::parse(pipeline::classification_metrics(preds, labels).to_json());
  } else {
    const auto unet = models::load_unet(load_checked_checkpoint(*o.unet, &ds.scaler));
    const auto result = pipeline::run_pyrofocus(test, ds.scaler, classifier, unet, cfg);
    out["classification"] = Json::parse(pipeline::classification_metrics(result.patch_classes, labels).to_json());
    out["routing"] = {{"patches_total", result.routing.patches_total},
                      {"patches_routed", result.routing.patches_routed},
                      {"gating_miss_rate", result.routing.gating_miss_rate()}};
    out["prediction_hash"] = hex64(result.prediction_hash());
    if (task == pipeline::Task::Segmentation) {
      std::vector<std::uint8_t> pred, truth;
      for (std::size_t i = 0; i < test.size(); ++i) {
        pred.insert(pred.end(), result.outputs[i].mask.begin(), result.outputs[i].mask.end());
        truth.insert(truth.end(), test[i].class_mask.begin(), test[i].class_mask.end());
      }
      out["segmentation"] = Json::parse(pipeline::segmentation_metrics(pred, truth).to_json());
    } else {
      std::vector<float> pred, truth;
      std::vector<std::uint8_t> mask;
      for (std::size_t i = 0; i < test.size(); ++i) {
        pred.insert(pred.end(), result.outputs[i].values.begin(), result.outputs[i].values.end());
        for (auto v : test[i].frp) truth.push_back(data::scale_frp(ds.scaler, v));
        mask.insert(mask.end(), test[i].class_mask.begin(), test[i].class_mask.end());
      }
      const auto m = pipeline::frp_metrics(pred, truth, mask);
      // Constant predictor: mean normalized FRP over training fire pixels.
      const auto train = data::load_partition(ds.paths.store(data::SplitKind::Train), data::SplitKind::Train);
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& p : train.patches()) {
        for (std::size_t k = 0; k < p.frp.size(); ++k) {
          if (p.class_mask[k] == 0) continue;
          sum += p.frp[k];
          ++n;
        }
      }
      const float constant = n ? static_cast<float>(sum / static_cast<double>(n)) : 0.0f;
      std::vector<float> baseline(truth.size(), constant);
      std::vector<std::uint8_t> fire(mask.size());
      for (std::size_t k = 0; k < mask.size(); ++k) fire[k] = mask[k] != 0;
      const auto base = pipeline::masked_mae(baseline, truth, fire);
      auto j = Json::parse(m.to_json());
      j["units"] = "normalized";
      j["baseline_constant"] = constant;
      j["baseline_masked_mae"] = base.value;
      j["mae_to_baseline_ratio"] = base.value > 0 ? m.mae.value / base.value : 0.0;
      out["frp"] = j;
    }
  }
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  pipeline::write_text(o.out, out.dump(2) + "\n");
  Json echo;
  echo["data"] = o.data.string();
  echo["classifier"] = o.classifier.string();
  echo["unet"] = o.unet ? o.unet->string() : "";
  echo["task"] = pipeline::to_string(task);
  echo["threads"] = o.threads;
  echo["out"] = o.out.string();
  write_config_echo(fs::path(o.out.string() + ".config.json"), "eval", echo);
  std::printf("%s\n", out.dump(2).c_str());
}

void cmd_bench(const BenchCliOptions& o) {
  if (o.pipeline != "single" && o.pipeline != "pyrofocus" && o.pipeline != "both") {
    throw UsageError("--pipeline must be single, pyrofocus or both");
  }
  if (o.top == 0) throw UsageError("--top must be at least 1");
  pipeline::BenchOptions bo;
  bo.task = pipeline::task_from_string(o.task);
  bo.repeats = o.repeats;
  bo.warmup = o.warmup;
  bo.threads = o.threads;
  if (o.repeats < 1) throw UsageError("--repeats must be at least 1");
  const auto ds = load_prepared(o.data);
  const auto classifier = models::load_classifier(load_checked_checkpoint(o.classifier, &ds.scaler));
  const auto unet = models::load_unet(load_checked_checkpoint(o.unet, &ds.scaler));

  auto raw = load_raw_dataset(ds.source);
  const auto manifest = data::SplitManifest::load(ds.paths.split());
  if (manifest.entries.size() != raw.patches.size()) {
    throw IncompatibilityError("split does not match the source dataset");
  }
  std::vector<std::uint32_t> test_scenes;
  for (const auto& e : manifest.entries) {
    if (e.split == data::SplitKind::Test &&
        std::find(test_scenes.begin(), test_scenes.end(), e.scene_id) == test_scenes.end()) {
      test_scenes.push_back(e.scene_id);
    }
  }
  auto ranked = rank_by_fire(raw, test_scenes);
  if (ranked.size() > o.top) ranked.resize(o.top);
  std::vector<std::vector<data::Patch>> images;
  for (auto id : ranked) {
    const auto first = raw.first_patch[id];
    const auto last = id + 1 < raw.first_patch.size() ? raw.first_patch[id + 1] : raw.patches.size();
    images.emplace_back(raw.patches.begin() + static_cast<std::ptrdiff_t>(first),
                        raw.patches.begin() + static_cast<std::ptrdiff_t>(last));
  }
  if (images.empty()) throw DataError("no test scenes to benchmark");

  const auto reports = pipeline::benchmark(images, ds.scaler, classifier, unet, bo);
  const auto fit = pipeline::fit_cost_model(reports[0], reports[1]);
  std::vector<pipeline::BenchReport> selected;
  if (o.pipeline != "pyrofocus") selected.push_back(reports[0]);
  if (o.pipeline != "single") selected.push_back(reports[1]);
  if (!o.report.parent_path().empty()) fs::create_directories(o.report.parent_path());
  pipeline::write_text(o.report, pipeline::bench_reports_json(selected, o.pipeline == "both" ? &fit : nullptr) + "\n");
  std::vector<pipeline::SweepRow> rows;
  for (const auto& r : selected) rows.push_back(pipeline::sweep_row(r, ds.prevalence));
  const auto sweep = o.sweep ? *o.sweep : fs::path(o.report.string() + ".sweep.csv");
  pipeline::write_text(sweep, pipeline::sweep_csv(rows));

  Json echo;
  echo["pipeline"] = o.pipeline;
  echo["task"] = pipeline::to_string(bo.task);
  echo["classifier"] = o.classifier.string();
  echo["unet"] = o.unet.string();
  echo["data"] = o.data.string();
  echo["repeats"] = o.repeats;
  echo["warmup"] = o.warmup;
  echo["threads"] = o.threads;
  echo["batch_size"] = bo.batch_size;
  echo["top"] = o.top;
  echo["scenes"] = ranked;
  echo["report"] = o.report.string();
  echo["sweep"] = sweep.string();
  write_config_echo(fs::path(o.report.string() + ".config.json"), "bench", echo);
  for (const auto& r : selected) {
    std::printf("%-9s %s: %.4f s/image (median %.4f), routed %zu/%zu, speedup %.1f%%\n", r.pipeline.c_str(),
                pipeline::to_string(r.task), r.end_to_end_s_mean, r.end_to_end_s_median, r.patches_routed,
                r.patches_total, r.speedup_percent);
  }
}

}  // namespace pyrofocus::cli
