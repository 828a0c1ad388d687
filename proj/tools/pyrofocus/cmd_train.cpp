#include <cstdio>

#include "commands.hpp"
#include "common.hpp"
#include "pyrofocus/data/patch_store.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/models/training.hpp"
#include "pyrofocus/pipeline/report.hpp"

namespace pyrofocus::cli {

namespace {

data::Partition fire_only(const data::Partition& p) {
  std::vector<data::Patch> kept;
  for (const auto& patch : p.patches()) {
    if (data::is_fire(patch.label)) kept.push_back(patch);
  }
  return {p.kind(), std::move(kept)};
}

fs::path sibling(const fs::path& path, const std::string& suffix) { return fs::path(path.string() + suffix); }

}  // namespace

void cmd_train(const TrainCliOptions& o) {
  const bool classifier = o.model == "simple-cnn" || o.model == "resnet-lite";
  const bool unet = o.model == "unet-seg" || o.model == "unet-frp";
  if (!classifier && !unet) {
    throw UsageError("--model must be simple-cnn, resnet-lite, unet-seg or unet-frp, got '" + o.model + "'");
  }
  const auto ds = load_prepared(o.data);
  auto train = data::load_partition(ds.paths.store(data::SplitKind::Train), data::SplitKind::Train);
  auto val = data::load_partition(ds.paths.store(data::SplitKind::Val), data::SplitKind::Val);

  auto opts = classifier ? models::TrainOptions::classifier_defaults() : models::TrainOptions::unet_defaults();
  if (o.epochs) opts.epochs = *o.epochs;
  if (o.batch) opts.batch_size = *o.batch;
  opts.lr = o.lr;
  opts.seed = resolve_seed(o.seed);
  opts.on_epoch = [](const models::HistoryRecord& r) {
    std::printf("epoch %d train_loss %.6f val_loss %.6f val_metric %.6f\n", r.epoch, r.train_loss, r.val_loss,
                r.val_metric);
    std::fflush(stdout);
  };

  Json echo;
  echo["model"] = o.model;
  echo["data"] = o.data.string();
  echo["out"] = o.out.string();
  echo["epochs"] = opts.epochs;
  echo["batch"] = opts.batch_size;
  echo["lr"] = opts.lr;
  echo["seed"] = opts.seed;
  echo["scaler_fingerprint"] = hex64(ds.scaler.fingerprint());

  models::Checkpoint ckpt;
  if (classifier) {
    models::ClassifierSpec spec;
    spec.arch = o.model == "simple-cnn" ? "simple_cnn" : "resnet_lite";
    spec.in_channels = ds.wavelengths.size();
    echo["spec"] = Json::parse(spec.to_json());
    ckpt = models::train_classifier(train, val, spec, ds.scaler, opts);
  } else {
    models::UNetSpec spec;
    spec.in_channels = ds.wavelengths.size();
    spec.head = o.model == "unet-seg" ? models::UNetHead::Segmentation : models::UNetHead::Frp;
    spec.base_width = o.unet_width;
    spec.depth = o.unet_depth;
    spec.deep_supervision = o.deep_supervision;
    echo["spec"] = Json::parse(spec.to_json());
    echo["train_on"] = o.all_patches ? "all_patches" : "fire_patches";
    echo["frp_loss"] = {{"alpha", opts.frp_loss.alpha}, {"beta", opts.frp_loss.beta}, {"gamma", opts.frp_loss.gamma}};
    if (!o.all_patches) {
      train = fire_only(train);
      val = fire_only(val);
    }
    ckpt = models::train_unet(train, val, spec, ds.scaler, opts);
  }
  ckpt.wavelengths = ds.wavelengths;
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  ckpt.save(o.out);
  pipeline::write_text(sibling(o.out, ".history.csv"), ckpt.history_csv());
  echo["best_epoch"] = ckpt.best_epoch;
  write_config_echo(sibling(o.out, ".config.json"), "train", echo);
  std::printf("saved %s (best epoch %d)\n", o.out.string().c_str(), ckpt.best_epoch);
}

}  // namespace pyrofocus::cli
