#include <cstdio>

#include "commands.hpp"
#include "common.hpp"
#include "pyrofocus/data/augment.hpp"
#include "pyrofocus/data/patch_store.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/pipeline/report.hpp"
#include "pyrofocus/synthgen/generator.hpp"

namespace pyrofocus::cli {

void cmd_gen(const GenOptions& o) {
  if (o.scenes == 0) throw UsageError("--scenes must be at least 1");
  synth::SceneConfig cfg;
  cfg.height = o.height;
  cfg.width = o.width;
  cfg.prevalence = o.prevalence;
  cfg.seed = resolve_seed(o.seed);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const auto manifest = synth::write_dataset(cfg, o.scenes, o.out);
  Json echo;
  echo["scenes"] = o.scenes;
  echo["out"] = o.out.string();
  echo["seed"] = cfg.seed;
  echo["generator"] = Json::parse(manifest.config_json);
  write_config_echo(o.out / "gen_config.json", "gen", echo);
  std::printf("wrote %zu scenes to %s\n", o.scenes, o.out.string().c_str());
}

void cmd_preprocess(const PreprocessOptions& o) {
  const auto seed = resolve_seed(o.seed);
  auto raw = load_raw_dataset(o.in);
  if (raw.scenes.empty()) throw DataError("dataset has no scenes");
  const auto wavelengths = raw.scenes.front().wavelengths;
  for (const auto& s : raw.scenes) {
    if (s.wavelengths != wavelengths) throw IncompatibilityError("scenes in the dataset use different band sets");
  }
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw UsageError("cannot create " + o.out.string() + ": " + ec.message());

  const auto manifest = data::split_dataset(raw.patches, {0.8, 0.1, 0.1}, seed);
  std::size_t fire_patches = 0;
  for (const auto& p : raw.patches) fire_patches += data::is_fire(p.label) ? 1 : 0;
  auto parts = data::partition(std::move(raw.patches), manifest);
  const auto scaler = data::fit_minmax(parts.train);
  data::apply_scaler(scaler, parts.train);
  data::apply_scaler(scaler, parts.val);
  data::apply_scaler(scaler, parts.test);
  std::size_t augmented = 0;
  if (o.augment) augmented = data::augment(parts.train, scaler, {0.01, seed});

  PreparedPaths paths{o.out};
  manifest.save(paths.split());
  scaler.save(paths.scaler());
  data::save_partition(parts.train, paths.store(data::SplitKind::Train));
  data::save_partition(parts.val, paths.store(data::SplitKind::Val));
  data::save_partition(parts.test, paths.store(data::SplitKind::Test));

  const auto gen = synth::DatasetManifest::load(o.in / "manifest.json");
  const auto gen_cfg = Json::parse(gen.config_json);
  Json info;
  info["source"] = fs::absolute(o.in).lexically_normal().string();
  info["scenes"] = raw.scene_files;
  info["wavelengths"] = wavelengths;
  info["prevalence"] = gen_cfg.value("prevalence", 0.0);
  info["seed"] = seed;
  info["augment"] = o.augment;
  info["patches"] = manifest.entries.size();
  info["fire_patches"] = fire_patches;
  const auto counts = manifest.counts();
  info["split_counts"] = {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}};
  info["train_patches_after_augment"] = parts.train.size();
  info["augmented"] = augmented;
  info["frp_join"] = {{"threshold_m", 5.0},
                      {"joined", raw.points_joined},
                      {"rejected", raw.points_rejected},
                      {"superseded", raw.points_superseded}};
  info["scaler_fingerprint"] = hex64(scaler.fingerprint());
  pipeline::write_text(paths.dataset(), info.dump(2) + "\n");
  Json echo;
  echo["in"] = o.in.string();
  echo["out"] = o.out.string();
  echo["augment"] = o.augment;
  echo["seed"] = seed;
  echo["split_ratios"] = {0.8, 0.1, 0.1};
  echo["augment_noise_fraction"] = 0.01;
  write_config_echo(o.out / "preprocess_config.json", "preprocess", echo);
  std::printf("patches %zu (train %zu, val %zu, test %zu), augmented %zu\n", manifest.entries.size(), counts[0],
              counts[1], counts[2], augmented);
}

}  // namespace pyrofocus::cli
