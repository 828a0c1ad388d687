#include <benchmark/benchmark.h>

#include <random>

#include "pyrofocus/models/classifier.hpp"
#include "pyrofocus/models/unet.hpp"
#include "pyrofocus/numerics/ops.hpp"

using namespace pyrofocus;
using FT = nn::Tensor<float>;

namespace {

FT random(nn::Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(nn::numel(shape));
  for (auto& x : v) x = d(rng);
  return FT(std::move(shape), std::move(v), grad);
}

// One patch-sized 3x3 convolution; arg is the channel count.
void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = random({1, c, 24, 64}, 1);
  const auto k = random({c, c, 3, 3}, 2);
  nn::NoGradGuard g;
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, k, 1, 1));
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(32)->Arg(64);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  auto x = random({8, c, 24, 64}, 1, true);
  auto k = random({c, c, 3, 3}, 2, true);
  for (auto _ : state) {
    x.zero_grad();
    k.zero_grad();
    nn::mean(nn::conv2d(x, k, 1, 1)).backward();
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(32);

void BM_ClassifierPerPatch(benchmark::State& state) {
  models::ClassifierSpec spec;
  if (state.range(0) == 1) spec.arch = "resnet_lite";
  const models::Classifier clf(spec, 1);
  const auto x = random({1, 9, 24, 64}, 3);
  nn::NoGradGuard g;
  for (auto _ : state) benchmark::DoNotOptimize(clf.forward(x, nn::Mode::Eval));
}
BENCHMARK(BM_ClassifierPerPatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// arg is the U-Net base width.
void BM_UNetPerPatch(benchmark::State& state) {
  models::UNetSpec spec;
  spec.base_width = static_cast<std::size_t>(state.range(0));
  const models::UNet unet(spec, 1);
  const auto x = random({1, 9, 24, 64}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(unet.infer(x));
}
BENCHMARK(BM_UNetPerPatch)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
