#include <CLI11.hpp>
#include <cstdio>
#include <functional>

#include "commands.hpp"
#include "pyrofocus/errors.hpp"

namespace pyrofocus::cli {

namespace {

int exit_code_for(const Error& e) {
  const std::string kind = e.kind();
  if (kind == "missing-input") return 3;
  if (kind == "incompatible") return 4;
  return 2;
}

void report(const char* kind, const std::string& message) {
  std::fprintf(stderr, "pyrofocus: error[%s]: %s\n", kind, message.c_str());
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"PyroFocus: cascade wildfire segmentation and FRP regression on multispectral patches", "pyrofocus"};
  app.require_subcommand(1);
  std::function<void()> action;

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate synthetic scenes, point lists and a manifest");
  g->add_option("--scenes", gen.scenes, "Number of scenes")->required();
  g->add_option("--height", gen.height, "Scene height in pixels")->capture_default_str();
  g->add_option("--width", gen.width, "Scene width in pixels")->capture_default_str();
  g->add_option("--prevalence", gen.prevalence, "Probability that a patch cell carries fire")->capture_default_str();
  g->add_option("--seed", gen.seed, "Seed (default: $PYROFOCUS_SEED or 0)");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->callback([&] { action = [&] { cmd_gen(gen); }; });

  PreprocessOptions pre;
  auto* p = app.add_subcommand("preprocess", "Tile, join FRP, split 80/10/10, fit the scaler, augment");
  p->add_option("--in", pre.in, "Generated dataset directory")->required();
  p->add_option("--out", pre.out, "Output directory")->required();
  p->add_flag("--augment", pre.augment, "Add a flipped, noised copy of every fire patch in the training split");
  p->add_option("--seed", pre.seed, "Seed (default: $PYROFOCUS_SEED or 0)");
  p->callback([&] { action = [&] { cmd_preprocess(pre); }; });

  TrainCliOptions tr;
  auto* t = app.add_subcommand("train", "Train a classifier or U-Net");
  t->add_option("--model", tr.model, "simple-cnn | resnet-lite | unet-seg | unet-frp")->required();
  t->add_option("--epochs", tr.epochs, "Epochs (default 30)");
  t->add_option("--batch", tr.batch, "Batch size (default 128 classifiers, 32 U-Nets)");
  t->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--seed", tr.seed, "Seed (default: $PYROFOCUS_SEED or 0)");
  t->add_option("--data", tr.data, "Preprocessed dataset directory")->required();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--unet-width", tr.unet_width, "U-Net base width")->capture_default_str();
  t->add_option("--unet-depth", tr.unet_depth, "U-Net depth (1-3)")->capture_default_str();
  t->add_flag("!--no-deep-supervision", tr.deep_supervision, "Disable auxiliary decoder losses");
  t->add_flag("--all-patches", tr.all_patches, "Train U-Nets on every patch instead of fire patches only");
  t->callback([&] { action = [&] { cmd_train(tr); }; });

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Evaluate checkpoints on the test split");
  e->add_option("--data", ev.data, "Preprocessed dataset directory")->required();
  e->add_option("--classifier", ev.classifier, "Classifier checkpoint")->required();
  e->add_option("--unet", ev.unet, "U-Net checkpoint (enables cascade metrics)");
  e->add_option("--task", ev.task, "seg | frp")->capture_default_str();
  e->add_option("--threads", ev.threads, "Inference threads")->capture_default_str();
  e->add_option("--out", ev.out, "Metrics JSON")->required();
  e->callback([&] { action = [&] { cmd_eval(ev); }; });

  BenchCliOptions be;
  auto* b = app.add_subcommand("bench", "Time single-stage vs cascade inference on the top test scenes");
  b->add_option("--pipeline", be.pipeline, "single | pyrofocus | both")->capture_default_str();
  b->add_option("--task", be.task, "seg | frp")->capture_default_str();
  b->add_option("--classifier", be.classifier, "Classifier checkpoint")->required();
  b->add_option("--unet", be.unet, "U-Net checkpoint")->required();
  b->add_option("--data", be.data, "Preprocessed dataset directory")->required();
  b->add_option("--repeats", be.repeats, "Timed repeats")->capture_default_str();
  b->add_option("--warmup", be.warmup, "Discarded warmup runs")->capture_default_str();
  b->add_option("--threads", be.threads, "Inference threads")->capture_default_str();
  b->add_option("--top", be.top, "Number of test scenes with the most fire pixels")->capture_default_str();
  b->add_option("--report", be.report, "BenchReport JSON path")->required();
  b->add_option("--sweep", be.sweep, "Sweep CSV path (default REPORT.sweep.csv)");
  b->callback([&] { action = [&] { cmd_bench(be); }; });

  InferOptions in;
  auto* i = app.add_subcommand("infer", "Run the cascade on one scene; write predictions and overlays");
  i->add_option("--scene", in.scene, "MSF scene")->required();
  i->add_option("--classifier", in.classifier, "Classifier checkpoint")->required();
  i->add_option("--unet", in.unet, "U-Net checkpoint")->required();
  i->add_option("--task", in.task, "seg | frp")->capture_default_str();
  i->add_option("--threads", in.threads, "Inference threads")->capture_default_str();
  i->add_option("--out", in.out, "Output prefix")->required();
  i->callback([&] { action = [&] { cmd_infer(in); }; });

  RenderOptions re;
  auto* r = app.add_subcommand("render", "Draw overlays for a scene and a prediction MSF");
  r->add_option("--scene", re.scene, "MSF scene")->required();
  r->add_option("--pred", re.prediction, "Prediction MSF written by infer")->required();
  r->add_option("--task", re.task, "seg | frp")->capture_default_str();
  r->add_option("--out", re.out, "Output prefix")->required();
  r->callback([&] { action = [&] { cmd_render(re); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    report("usage", ex.what());
    return 2;
  }
  try {
    action();
    return 0;
  } catch (const Error& ex) {
    report(ex.kind(), ex.what());
    return exit_code_for(ex);
  } catch (const std::filesystem::filesystem_error& ex) {
    report("usage", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    report("internal", ex.what());
    return 1;
  }
}

}  // namespace pyrofocus::cli
