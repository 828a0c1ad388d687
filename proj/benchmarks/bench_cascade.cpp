#include <benchmark/benchmark.h>

#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/data/scaler.hpp"
#include "pyrofocus/data/split.hpp"
#include "pyrofocus/models/classifier.hpp"
#include "pyrofocus/models/unet.hpp"
#include "pyrofocus/pipeline/cascade.hpp"
#include "pyrofocus/synthgen/generator.hpp"

using namespace pyrofocus;

namespace {

struct Fixture {
  std::vector<data::Patch> patches;
  data::ScalerParams scaler;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    synth::SceneConfig cfg;
    for (std::size_t i = 0; i < 4; ++i) {
      cfg.seed = synth::scene_seed(1, i);
      auto t = data::patchify(synth::generate_scene(cfg).scene, static_cast<std::uint32_t>(i));
      for (auto& p : t.patches) x.patches.push_back(std::move(p));
    }
    x.scaler = data::fit_minmax(data::Partition(data::SplitKind::Train, x.patches));
    return x;
  }();
  return f;
}

void BM_SingleStage(benchmark::State& state) {
  const auto& f = fixture();
  const models::UNet unet(models::UNetSpec{}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::run_single_stage(f.patches, f.scaler, unet, {}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.patches.size()));
}
BENCHMARK(BM_SingleStage)->Unit(benchmark::kMillisecond);

// Threshold routing on a stock classifier: arg is the threshold in percent,
// which sweeps the routed fraction from everything to nothing.
void BM_Cascade(benchmark::State& state) {
  const auto& f = fixture();
  const models::UNet unet(models::UNetSpec{}, 1);
  const models::Classifier clf(models::ClassifierSpec{}, 1);
  pipeline::CascadeConfig cfg;
  cfg.routing = pipeline::RoutingMode::Threshold;
  cfg.threshold = static_cast<double>(state.range(0)) / 100.0;
  std::size_t routed = 0;
  for (auto _ : state) {
    const auto r = pipeline::run_pyrofocus(f.patches, f.scaler, clf, unet, cfg);
    routed = r.routing.patches_routed;
    benchmark::DoNotOptimize(r);
  }
  state.counters["routed"] = static_cast<double>(routed);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.patches.size()));
}
BENCHMARK(BM_Cascade)->Arg(0)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
