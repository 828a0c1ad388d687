// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <json.hpp>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "pyrofocus/data/frp_join.hpp"
#include "pyrofocus/data/msf.hpp"
#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/data/scaler.hpp"
#include "pyrofocus/data/split.hpp"
#include "pyrofocus/models/losses.hpp"
#include "pyrofocus/models/training.hpp"
#include "pyrofocus/pipeline/benchmark.hpp"
#include "pyrofocus/pipeline/cascade.hpp"
#include "pyrofocus/pipeline/metrics.hpp"
#include "pyrofocus/synthgen/generator.hpp"
#include "rigged.hpp"

using namespace pyrofocus;
namespace fs = std::filesystem;
using json = nlohmann::json;
using pftest::DTensor;

namespace {

// Tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr int kGradShapes = 20;
constexpr double kGradBudgetS = 120.0;
constexpr double kCascadeBudgetS = 120.0;
constexpr double kCostModelTol = 0.20;
constexpr double kMinSpeedup = 40.0;
constexpr double kRatioForSpeedup = 10.0;
constexpr double kLatencyBudgetS = 300.0;
constexpr double kMinAccuracy = 0.95;
constexpr double kMinMiou = 0.90;
constexpr double kMaxMaeRatio = 0.5;
constexpr double kLearningBudgetS = 900.0;
constexpr double kScalerTol = 1e-6;
constexpr double kMetricTol = 1e-12;
constexpr double kRowSumTol = 1e-9;

// Training recipe for the end-to-end run.
constexpr std::uint64_t kSeed = 42;
constexpr std::size_t kScenes = 200;
constexpr int kClassifierEpochs = 15;
constexpr int kSegEpochs = 20;
constexpr int kFrpEpochs = 15;
constexpr std::size_t kUNetWidth = 16;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- 1

std::vector<double> rand_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = d(rng);
  return w;
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

// Moves values at least `gap` away from every kink.
void clear_kinks(DTensor& t, std::initializer_list<double> kinks, double gap = 0.05) {
  for (auto& v : t.mutable_values())
    for (double k : kinks)
      if (std::abs(v - k) < gap) v = k + 2 * gap;
}

Outcome grad_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::map<std::string, double> worst;
  std::map<std::string, int> shapes;
  bool finite = true;
  auto record = [&](const std::string& name, const pftest::GradCheckResult& r) {
    worst[name] = std::max(worst[name], r.max_relative_error);
    shapes[name]++;
    finite = finite && r.finite && std::isfinite(r.max_relative_error);
  };
  using Fn = std::function<DTensor(const std::vector<DTensor>&)>;

  for (int s = 0; s < kGradShapes; ++s) {
    {
      const std::size_t k = pick(rng, 1, 3), stride = pick(rng, 1, 2), pad = pick(rng, 0, 1);
      const std::size_t n = pick(rng, 1, 2), ci = pick(rng, 1, 3), co = pick(rng, 1, 3);
      const std::size_t h = pick(rng, k, 7), w = pick(rng, k, 7);
      auto x = pftest::random_tensor({n, ci, h, w}, rng);
      auto ker = pftest::random_tensor({co, ci, k, k}, rng);
      auto b = pftest::random_tensor({co}, rng);
      const std::size_t ho = (h + 2 * pad - k) / stride + 1, wo = (w + 2 * pad - k) / stride + 1;
      const auto wt = rand_weights(n * co * ho * wo, rng);
      const int st = static_cast<int>(stride), pd = static_cast<int>(pad);
      record("conv2d", pftest::grad_check(
                           Fn([&](const std::vector<DTensor>& in) {
                             return pftest::weighted_sum(nn::conv2d(in[0], in[1], in[2], st, pd), wt);
                           }),
                           {x, ker, b}));
    }
    {
      const std::size_t k = pick(rng, 1, 3), stride = pick(rng, 1, 2);
      const std::size_t n = pick(rng, 1, 2), ci = pick(rng, 1, 3), co = pick(rng, 1, 3);
      const std::size_t h = pick(rng, 1, 5), w = pick(rng, 1, 5);
      auto x = pftest::random_tensor({n, ci, h, w}, rng);
      auto ker = pftest::random_tensor({ci, co, k, k}, rng);
      auto b = pftest::random_tensor({co}, rng);
      const auto wt = rand_weights(n * co * ((h - 1) * stride + k) * ((w - 1) * stride + k), rng);
      const int st = static_cast<int>(stride);
      record("conv_transpose2d", pftest::grad_check(
                                     Fn([&](const std::vector<DTensor>& in) {
                                       return pftest::weighted_sum(nn::conv_transpose2d(in[0], in[1], in[2], st), wt);
                                     }),
                                     {x, ker, b}));
    }
    {
      const std::size_t n = pick(rng, 2, 3), c = pick(rng, 1, 3), h = pick(rng, 1, 4), w = pick(rng, 1, 4);
      auto x = pftest::random_tensor({n, c, h, w}, rng);
      auto g = pftest::random_tensor({c}, rng, 0.5, 1.5);
      auto b = pftest::random_tensor({c}, rng);
      const auto mode = s % 2 ? nn::Mode::Eval : nn::Mode::Train;
      auto stats = nn::BatchNormStats<double>::identity(c);
      if (mode == nn::Mode::Eval) {
        for (std::size_t i = 0; i < c; ++i) {
          stats.running_mean[i] = 0.3 * static_cast<double>(i);
          stats.running_var[i] = 0.5 + static_cast<double>(i);
        }
      }
      const auto wt = rand_weights(x.size(), rng);
      record("batchnorm2d", pftest::grad_check(
                                Fn([&](const std::vector<DTensor>& in) {
                                  auto st = stats;  // train mode must not drift the stats between probes
                                  return pftest::weighted_sum(nn::batchnorm2d(in[0], in[1], in[2], st, mode), wt);
                                }),
                                {x, g, b}));
    }
    {
      const std::size_t k = pick(rng, 2, 3), stride = pick(rng, 1, 2);
      const std::size_t n = pick(rng, 1, 2), c = pick(rng, 1, 3), h = pick(rng, k, 7), w = pick(rng, k, 7);
      auto x = pftest::random_tensor({n, c, h, w}, rng);
      const auto wt = rand_weights(n * c * ((h - k) / stride + 1) * ((w - k) / stride + 1), rng);
      const int kk = static_cast<int>(k), st = static_cast<int>(stride);
      record("maxpool2d", pftest::grad_check(Fn([&](const std::vector<DTensor>& in) {
                                               return pftest::weighted_sum(nn::maxpool2d(in[0], kk, st), wt);
                                             }),
                                             {x}));
    }
    for (auto kind : {nn::Activation::ReLU, nn::Activation::LeakyReLU, nn::Activation::GELU, nn::Activation::HSwish}) {
      auto x = pftest::random_tensor({pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 5), pick(rng, 1, 5)}, rng, -5, 5);
      clear_kinks(x, {0.0, 3.0, -3.0});
      const auto wt = rand_weights(x.size(), rng);
      const char* names[] = {"relu", "leaky_relu", "gelu", "hswish"};
      record(std::string("activation/") + names[static_cast<int>(kind)],
             pftest::grad_check(Fn([&](const std::vector<DTensor>& in) {
                                  return pftest::weighted_sum(nn::activation(in[0], kind), wt);
                                }),
                                {x}));
    }
    {
      const std::size_t n = pick(rng, 1, 5), in_f = pick(rng, 1, 8), out_f = pick(rng, 1, 6);
      auto x = pftest::random_tensor({n, in_f}, rng);
      auto w = pftest::random_tensor({out_f, in_f}, rng);
      auto b = pftest::random_tensor({out_f}, rng);
      const auto wt = rand_weights(n * out_f, rng);
      record("linear", pftest::grad_check(Fn([&](const std::vector<DTensor>& in) {
                                            return pftest::weighted_sum(nn::linear(in[0], in[1], in[2]), wt);
                                          }),
                                          {x, w, b}));
    }
    {
      const std::size_t n = pick(rng, 1, 3), k = pick(rng, 2, 5);
      const bool spatial = s % 2 == 1;
      const std::size_t h = spatial ? pick(rng, 1, 4) : 1, w = spatial ? pick(rng, 1, 4) : 1;
      auto x = spatial ? pftest::random_tensor({n, k, h, w}, rng, -3, 3) : pftest::random_tensor({n, k}, rng, -3, 3);
      std::vector<std::int32_t> t(n * h * w);
      for (auto& v : t) v = static_cast<std::int32_t>(rng() % k);
      record("softmax_cross_entropy", pftest::grad_check(Fn([&](const std::vector<DTensor>& in) {
                                                           return nn::softmax_cross_entropy(in[0], t);
                                                         }),
                                                         {x}));
    }
    {
      const std::size_t n = pick(rng, 1, 3), h = pick(rng, 1, 5), w = pick(rng, 1, 6);
      auto pred = pftest::random_tensor({n, 1, h, w}, rng, -1, 2);
      std::vector<double> target(n * h * w);
      std::vector<std::uint8_t> mask(n * h * w);
      std::uniform_real_distribution<double> u(0.0, 1.5);
      for (std::size_t i = 0; i < target.size(); ++i) {
        target[i] = u(rng);
        mask[i] = rng() % 2;
        auto& p = pred.mutable_values()[i];
        if (mask[i] && std::abs(p - target[i]) < 0.05) p = target[i] + 0.1;  // |.| kink
        if (!mask[i] && std::abs(p) < 0.05) p = 0.1;                        // max(.,0) kink
      }
      models::FrpLossConfig cfg{1.0, 0.1 + 0.05 * (s % 3), 0.5};
      record("frp_loss", pftest::grad_check(Fn([&](const std::vector<DTensor>& in) {
                                              return models::frp_loss<double>(in[0], target, mask, cfg);
                                            }),
                                            {pred}));
    }
  }
  const double elapsed = since(t0);
  bool pass = finite && elapsed < kGradBudgetS;
  std::string worst_name;
  double worst_err = 0.0;
  for (const auto& [name, err] : worst) {
    pass = pass && err < kGradTol && shapes[name] >= kGradShapes;
    if (err >= worst_err) {
      worst_err = err;
      worst_name = name;
    }
  }
  return {pass, fmt("%zu primitives x %d shapes, worst rel err %.2e (%s), %.1fs", worst.size(), kGradShapes, worst_err,
                    worst_name.c_str(), elapsed)};
}

// ---------------------------------------------------------------- 2

std::vector<data::Patch> synthetic_patches(std::size_t scenes, std::uint64_t base_seed, double prevalence,
                                           std::vector<std::vector<data::Patch>>* per_scene = nullptr) {
  synth::SceneConfig cfg;
  cfg.prevalence = prevalence;
  std::vector<data::Patch> all;
  for (std::size_t i = 0; i < scenes; ++i) {
    cfg.seed = synth::scene_seed(base_seed, i);
    auto t = data::patchify(synth::generate_scene(cfg).scene, static_cast<std::uint32_t>(i));
    if (per_scene) per_scene->push_back(t.patches);
    for (auto& p : t.patches) all.push_back(std::move(p));
  }
  return all;
}

Outcome cascade_equivalence() {
  const auto t0 = Clock::now();
  const auto patches = synthetic_patches(50, 2024, 0.3);
  const auto scaler = data::fit_minmax(data::Partition(data::SplitKind::Train, patches));
  const auto clf = pftest::mixed_classifier(patches, scaler, 0.35);
  std::size_t routed = 0, skipped = 0, mismatches = 0;
  for (auto task : {pipeline::Task::Segmentation, pipeline::Task::Frp}) {
    models::UNetSpec spec;
    spec.base_width = kUNetWidth;
    spec.head = task == pipeline::Task::Frp ? models::UNetHead::Frp : models::UNetHead::Segmentation;
    const models::UNet unet(spec, 7);
    pipeline::CascadeConfig cfg;
    cfg.task = task;
    const auto single = pipeline::run_single_stage(patches, scaler, unet, cfg);
    const auto casc = pipeline::run_pyrofocus(patches, scaler, clf, unet, cfg);
    if (casc.routing.unet_invocations != casc.routing.patches_routed) ++mismatches;
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const auto& o = casc.outputs[i];
      if (o.routed != (casc.patch_classes[i] != 0)) ++mismatches;
      if (o.routed) {
        ++routed;
        const auto& ref = single.outputs[i];
        if (o.values.size() != ref.values.size() || o.mask != ref.mask ||
            std::memcmp(o.values.data(), ref.values.data(), o.values.size() * sizeof(float)) != 0)
          ++mismatches;
      } else {
        ++skipped;
        bool clean = std::all_of(o.mask.begin(), o.mask.end(), [](auto m) { return m == 0; });
        if (task == pipeline::Task::Frp)
          clean = clean && std::all_of(o.values.begin(), o.values.end(), [](float v) { return v == 0.0f; });
        if (!clean) ++mismatches;
      }
    }
  }
  const double elapsed = since(t0);
  const bool pass = mismatches == 0 && routed > 0 && skipped > 0 && elapsed < kCascadeBudgetS;
  return {pass, fmt("50 scenes, seg+frp: %zu routed, %zu skipped, %zu mismatches, %.1fs", routed, skipped, mismatches,
                    elapsed)};
}

// ---------------------------------------------------------------- 4 (and the classifier for 3)

std::optional<models::Checkpoint> g_classifier;

data::Partition fire_only(const data::Partition& p) {
  std::vector<data::Patch> v;
  for (const auto& x : p.patches())
    if (x.label != data::FireClass::NoFire) v.push_back(x);
  return data::Partition(p.kind(), std::move(v));
}

models::TrainOptions options(int epochs, bool unet) {
  auto o = unet ? models::TrainOptions::unet_defaults() : models::TrainOptions::classifier_defaults();
  o.epochs = epochs;
  o.seed = kSeed;
  return o;
}

Outcome end_to_end_learning() {
  const auto t0 = Clock::now();
  auto all = synthetic_patches(kScenes, kSeed, synth::SceneConfig{}.prevalence);
  auto parts = data::partition(all, data::split_dataset(all, {0.8, 0.1, 0.1}, kSeed));
  const auto scaler = data::fit_minmax(parts.train);
  const auto raw_test = parts.test;  // cascade input; the pipeline scales it
  data::apply_scaler(scaler, parts.train);
  data::apply_scaler(scaler, parts.val);
  data::apply_scaler(scaler, parts.test);

  g_classifier = models::train_classifier(parts.train, parts.val, models::ClassifierSpec{}, scaler,
                                          options(kClassifierEpochs, false));
  const auto fire_train = fire_only(parts.train), fire_val = fire_only(parts.val);
  models::UNetSpec seg_spec;
  seg_spec.base_width = kUNetWidth;
  const auto seg_ckpt = models::train_unet(fire_train, fire_val, seg_spec, scaler, options(kSegEpochs, true));
  auto frp_spec = seg_spec;
  frp_spec.head = models::UNetHead::Frp;
  const auto frp_ckpt = models::train_unet(fire_train, fire_val, frp_spec, scaler, options(kFrpEpochs, true));

  const auto clf = models::load_classifier(*g_classifier);
  const auto seg = pipeline::run_pyrofocus(raw_test.patches(), scaler, clf, models::load_unet(seg_ckpt), {});
  pipeline::CascadeConfig frp_cfg;
  frp_cfg.task = pipeline::Task::Frp;
  const auto frp = pipeline::run_pyrofocus(raw_test.patches(), scaler, clf, models::load_unet(frp_ckpt), frp_cfg);

  std::vector<std::uint8_t> pred_cls, true_cls, pred_mask, true_mask;
  std::vector<float> pred_frp, true_frp;
  for (std::size_t i = 0; i < parts.test.size(); ++i) {
    const auto& p = parts.test.patches()[i];
    pred_cls.push_back(seg.patch_classes[i]);
    true_cls.push_back(static_cast<std::uint8_t>(p.label));
    pred_mask.insert(pred_mask.end(), seg.outputs[i].mask.begin(), seg.outputs[i].mask.end());
    true_mask.insert(true_mask.end(), p.class_mask.begin(), p.class_mask.end());
    pred_frp.insert(pred_frp.end(), frp.outputs[i].values.begin(), frp.outputs[i].values.end());
    true_frp.insert(true_frp.end(), p.frp.begin(), p.frp.end());
  }
  // Constant predictor: mean normalized FRP over training fire pixels.
  double mean = 0.0;
  std::size_t n = 0;
  for (const auto& p : parts.train.patches())
    for (std::size_t i = 0; i < p.frp.size(); ++i)
      if (p.class_mask[i]) {
        mean += p.frp[i];
        ++n;
      }
  mean /= static_cast<double>(std::max<std::size_t>(n, 1));
  const std::vector<float> constant(true_frp.size(), static_cast<float>(mean));

  const double accuracy = pipeline::confusion_matrix(pred_cls, true_cls).accuracy();
  const double miou = pipeline::miou(pred_mask, true_mask);
  const auto mae = pipeline::masked_mae(pred_frp, true_frp, true_mask);
  const auto base = pipeline::masked_mae(constant, true_frp, true_mask);
  const double ratio = base.value > 0 ? mae.value / base.value : INFINITY;
  const double elapsed = since(t0);
  const bool pass = accuracy >= kMinAccuracy && miou >= kMinMiou && !mae.empty_mask && ratio <= kMaxMaeRatio &&
                    elapsed <= kLearningBudgetS;
  return {pass, fmt("accuracy %.4f, MIoU %.4f, FRP MAE %.5f vs baseline %.5f (ratio %.3f), %.0fs", accuracy, miou,
                    mae.value, base.value, ratio, elapsed)};
}

// ---------------------------------------------------------------- 3

Outcome latency_structure() {
  const auto t0 = Clock::now();
  if (!g_classifier) {
    auto all = synthetic_patches(kScenes, kSeed, synth::SceneConfig{}.prevalence);
    auto parts = data::partition(all, data::split_dataset(all, {0.8, 0.1, 0.1}, kSeed));
    const auto scaler = data::fit_minmax(parts.train);
    data::apply_scaler(scaler, parts.train);
    data::apply_scaler(scaler, parts.val);
    g_classifier = models::train_classifier(parts.train, parts.val, models::ClassifierSpec{}, scaler,
                                            options(kClassifierEpochs, false));
  }
  const auto& scaler = g_classifier->scaler;
  const auto clf = models::load_classifier(*g_classifier);
  const models::UNet unet(models::UNetSpec{}, 3);  // default width 32

  // Test split of a p = 0.1 dataset, kept per scene.
  std::vector<std::vector<data::Patch>> scenes;
  const auto all = synthetic_patches(100, 77, 0.1, &scenes);
  const auto manifest = data::split_dataset(all, {0.8, 0.1, 0.1}, 77);
  std::vector<std::vector<data::Patch>> images;
  std::size_t id = 0;
  for (const auto& s : scenes) {
    std::vector<data::Patch> test;
    for (const auto& p : s)
      if (manifest.entries[id++].split == data::SplitKind::Test) test.push_back(p);
    if (!test.empty()) images.push_back(std::move(test));
  }
  pipeline::BenchOptions o;
  o.repeats = 3;
  o.warmup = 1;
  o.threads = 1;
  const auto reports = pipeline::benchmark(images, scaler, clf, unet, o);
  const auto fit = pipeline::fit_cost_model(reports[0], reports[1]);
  const double speedup = reports[1].speedup_percent;
  const bool fit_ok = fit.relative_error <= kCostModelTol;
  const bool speed_ok = fit.unet_to_cls_ratio < kRatioForSpeedup || speedup >= kMinSpeedup;
  const double elapsed = since(t0);
  return {fit_ok && speed_ok && elapsed < kLatencyBudgetS,
          fmt("%zu patches, %zu routed; cost model error %.1f%%; t_unet/t_cls %.1f; speedup %.1f%%; %.0fs",
              reports[1].patches_total, reports[1].patches_routed, 100 * fit.relative_error, fit.unet_to_cls_ratio,
              speedup, elapsed)};
}

// ---------------------------------------------------------------- 5

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

bool same_scene(const data::Scene& a, const data::Scene& b) {
  auto same_d = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
  };
  bool ok = a.height == b.height && a.width == b.width && same_bits(a.wavelengths, b.wavelengths) &&
            same_bits(a.bands, b.bands) && a.class_mask == b.class_mask && a.frp.has_value() == b.frp.has_value() &&
            a.geolocation.has_value() == b.geolocation.has_value();
  if (ok && a.frp) ok = same_bits(*a.frp, *b.frp);
  if (ok && a.geolocation)
    ok = same_d(a.geolocation->latitude, b.geolocation->latitude) &&
         same_d(a.geolocation->longitude, b.geolocation->longitude);
  return ok;
}

Outcome round_trips() {
  const auto dir = pftest::temp_dir("acceptance_roundtrip");
  std::size_t failures = 0, scenes = 0;
  double worst_scaler = 0.0;
  std::vector<data::Patch> all;
  std::mt19937_64 rng(5);
  for (std::size_t i = 0; i < 20; ++i) {
    synth::SceneConfig cfg;
    cfg.height = 24 * pick(rng, 1, 4) + pick(rng, 0, 23);  // leaves a cropped remainder
    cfg.width = 64 * pick(rng, 1, 3) + pick(rng, 0, 63);
    cfg.seed = 100 + i;
    cfg.prevalence = 0.5;
    const auto s = synth::generate_scene(cfg).scene;
    ++scenes;
    data::save_scene(s, dir / "s.msf");
    if (!same_scene(s, data::load_scene(dir / "s.msf"))) ++failures;

    auto t = data::patchify(s, static_cast<std::uint32_t>(i));
    const auto st = data::stitch(t.patches, t.height, t.width, s.channels());
    const auto crop = data::crop(s, t.height, t.width);
    if (!same_bits(st.bands, crop.bands) || st.class_mask != *crop.class_mask || !same_bits(st.frp, *crop.frp))
      ++failures;
    for (auto& p : t.patches) all.push_back(std::move(p));
  }
  const auto scaler = data::fit_minmax(data::Partition(data::SplitKind::Train, all));
  for (const auto& p : all) {
    auto v = p.data;
    data::apply_scaler<float>(scaler, v, p.plane_size());
    data::invert_scaler<float>(scaler, v, p.plane_size());
    for (std::size_t c = 0; c < p.channels; ++c) {
      if (scaler.degenerate[c]) continue;
      for (std::size_t i = 0; i < p.plane_size(); ++i) {
        const std::size_t k = c * p.plane_size() + i;
        // relative to the band range, the scale the round trip operates on
        const double range = scaler.band_max[c] - scaler.band_min[c];
        worst_scaler = std::max(worst_scaler, std::abs(static_cast<double>(v[k]) - p.data[k]) / range);
      }
    }
  }
  if (worst_scaler > kScalerTol) ++failures;

  std::size_t split_checks = 0;
  for (std::size_t n : {std::size_t{10}, std::size_t{37}, std::size_t{99}, std::size_t{100}, std::size_t{123}, std::size_t{1000}, all.size()}) {
    std::vector<data::Patch> ps(all.begin(), all.begin() + std::min(n, all.size()));
    const auto m = data::split_dataset(ps, {0.8, 0.1, 0.1}, n);
    const auto c = m.counts();
    const double total = static_cast<double>(ps.size());
    if (c[0] + c[1] + c[2] != ps.size() || m.entries.size() != ps.size()) ++failures;
    if (std::abs(c[0] - 0.8 * total) > 1.0 || std::abs(c[1] - 0.1 * total) > 1.0 || std::abs(c[2] - 0.1 * total) > 1.0)
      ++failures;
    auto parts = data::partition(ps, m);
    std::set<std::tuple<std::uint32_t, std::size_t, std::size_t>> seen;
    for (const auto* p : {&parts.train, &parts.val, &parts.test})
      for (const auto& x : p->patches()) seen.insert({x.scene_id, x.row, x.col});
    if (seen.size() != ps.size()) ++failures;
    ++split_checks;
  }
  return {failures == 0, fmt("%zu scenes MSF+stitch, scaler worst %.1e of range, %zu split sizes, %zu failures", scenes,
                             worst_scaler, split_checks, failures)};
}

// ---------------------------------------------------------------- 6

// Nearest pixel centre by exhaustive search, then per-pixel conflict
// resolution: nearest point, larger FRP, earlier point.
std::vector<std::ptrdiff_t> brute_force_join(const std::vector<data::FrpPoint>& pts, const data::Scene& s,
                                             double threshold) {
  const auto proj = data::LocalProjection::about_center(*s.geolocation);
  const auto& g = *s.geolocation;
  std::vector<std::ptrdiff_t> nearest(pts.size(), -1);
  std::vector<double> dist(pts.size(), INFINITY);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t p = 0; p < s.plane_size(); ++p) {
      const double d = proj.distance_m(pts[i].lat, pts[i].lon, g.latitude[p], g.longitude[p]);
      if (d < dist[i]) {
        dist[i] = d;
        nearest[i] = static_cast<std::ptrdiff_t>(p);
      }
    }
    if (dist[i] > threshold) nearest[i] = -1;
  }
  std::map<std::ptrdiff_t, std::size_t> winner;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (nearest[i] < 0) continue;
    auto it = winner.find(nearest[i]);
    if (it == winner.end()) {
      winner[nearest[i]] = i;
      continue;
    }
    const std::size_t w = it->second;
    if (dist[i] < dist[w] || (dist[i] == dist[w] && pts[i].frp_mw > pts[w].frp_mw)) it->second = i;
  }
  std::vector<std::ptrdiff_t> out(pts.size(), -1);
  for (const auto& [pixel, i] : winner) out[i] = pixel;
  return out;
}

Outcome frp_join() {
  const auto t0 = Clock::now();
  std::size_t scenes = 0, points = 0, decoys = 0, failures = 0;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < 100; ++i) {
    synth::SceneConfig cfg;
    cfg.seed = 5000 + i;
    cfg.prevalence = 0.2 + 0.6 * u(rng);
    cfg.decoy_fraction = 0.05 + 0.25 * u(rng);
    cfg.point_jitter_m = 3.5 * u(rng);  // stays under threshold / sqrt(2)
    cfg.pixel_spacing_m = 30.0 + 40.0 * u(rng);
    cfg.center_lat = -60.0 + 120.0 * u(rng);
    cfg.center_lon = -180.0 + 360.0 * u(rng);
    const auto g = synth::generate_scene(cfg);
    ++scenes;
    points += g.points.size();
    const auto r = data::join_frp(g.points, g.scene, cfg.join_threshold_m);
    if (r.assigned != brute_force_join(g.points, g.scene, cfg.join_threshold_m)) ++failures;
    for (std::size_t k = 0; k < g.points.size(); ++k) {
      if (!g.point_is_decoy[k]) continue;
      ++decoys;
      if (r.assigned[k] >= 0) ++failures;
    }
    // Non-decoy points recover the generator's truth plane.
    if (!same_bits(r.plane, *g.scene.frp)) ++failures;
  }
  return {failures == 0 && decoys > 0,
          fmt("%zu scenes, %zu points (%zu decoys), %zu failures, %.1fs", scenes, points, decoys, failures, since(t0))};
}

// ---------------------------------------------------------------- 7

Outcome metric_oracles() {
  std::mt19937_64 rng(7);
  std::size_t failures = 0;
  double worst = 0.0, worst_row = 0.0;
  constexpr int kInstances = 1000;
  auto check = [&](double got, double want) {
    const double e = std::abs(got - want);
    worst = std::max(worst, e);
    if (!(e <= kMetricTol)) ++failures;
  };
  for (int it = 0; it < kInstances; ++it) {
    const std::size_t n = pick(rng, 1, 400);
    const std::size_t k = pick(rng, 1, 4);  // classes actually drawn
    std::vector<std::uint8_t> p(n), t(n), m(n);
    std::vector<float> a(n), b(n);
    std::uniform_real_distribution<float> val(0.0f, 5.0f);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<std::uint8_t>(rng() % k);
      p[i] = rng() % 3 ? t[i] : static_cast<std::uint8_t>(rng() % 4);
      a[i] = val(rng);
      b[i] = rng() % 4 ? val(rng) : a[i];
      m[i] = rng() % 2;
    }

    // Confusion: counts by direct tally, rows by division.
    const auto cm = pipeline::confusion_matrix(p, t);
    for (std::size_t r = 0; r < 4; ++r) {
      std::size_t row_total = 0;
      for (std::size_t i = 0; i < n; ++i) row_total += t[i] == r;
      double row_sum = 0.0;
      for (std::size_t c = 0; c < 4; ++c) {
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < n; ++i) cnt += t[i] == r && p[i] == c;
        if (cm.count(r, c) != cnt) ++failures;
        check(cm.normalized[r * 4 + c], row_total ? static_cast<double>(cnt) / static_cast<double>(row_total) : 0.0);
        row_sum += cm.normalized[r * 4 + c];
      }
      if (row_total) {
        worst_row = std::max(worst_row, std::abs(row_sum - 1.0));
        if (std::abs(row_sum - 1.0) > kRowSumTol) ++failures;
      }
      if (cm.zero_support[r] != (row_total == 0)) ++failures;
    }

    // MIoU: set intersection over set union, averaged over classes present in either.
    double iou_sum = 0.0;
    int present = 0;
    for (std::uint8_t c = 0; c < 4; ++c) {
      std::set<std::size_t> ps, ts;
      for (std::size_t i = 0; i < n; ++i) {
        if (p[i] == c) ps.insert(i);
        if (t[i] == c) ts.insert(i);
      }
      std::vector<std::size_t> inter, uni;
      std::set_intersection(ps.begin(), ps.end(), ts.begin(), ts.end(), std::back_inserter(inter));
      std::set_union(ps.begin(), ps.end(), ts.begin(), ts.end(), std::back_inserter(uni));
      if (uni.empty()) continue;
      iou_sum += static_cast<double>(inter.size()) / static_cast<double>(uni.size());
      ++present;
    }
    check(pipeline::miou(p, t), iou_sum / present);

    // Masked MAE in long double.
    long double s = 0.0L;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (m[i]) {
        s += std::fabs(static_cast<long double>(a[i]) - static_cast<long double>(b[i]));
        ++cnt;
      }
    const auto mae = pipeline::masked_mae(a, b, m);
    if (mae.empty_mask != (cnt == 0) || mae.pixels != cnt) ++failures;
    check(mae.value, cnt ? static_cast<double>(s / cnt) : 0.0);
  }
  return {failures == 0, fmt("%d instances x 3 metrics, worst abs err %.1e, worst row-sum err %.1e, %zu failures",
                             kInstances, worst, worst_row, failures)};
}

// ---------------------------------------------------------------- 8

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pyrofocus");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops wall-clock fields from a report.
void strip_timings(json& j) {
  static const std::set<std::string> timing{"stage_totals_s", "per_patch_ms", "end_to_end_s_per_image", "total_s",
                                            "repeat_totals_s", "speedup_percent", "cost_model", "times"};
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      if (timing.count(it.key())) {
        it = j.erase(it);
      } else {
        strip_timings(it.value());
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& x : j) strip_timings(x);
  }
}

// Every file under `dir`, relative path -> contents (reports without timings).
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).string();
    auto text = slurp(e.path());
    if (rel.rfind("bench", 0) == 0 && e.path().extension() == ".json") {
      auto j = json::parse(text);
      strip_timings(j);
      text = j.dump();
    } else if (e.path().extension() == ".csv" && rel.find("sweep") != std::string::npos) {
      // The last two columns are end-to-end time and speedup.
      std::istringstream in(text);
      std::string line, kept;
      while (std::getline(in, line)) {
        for (int k = 0; k < 2; ++k) line = line.substr(0, line.rfind(','));
        kept += line + "\n";
      }
      text = kept;
    }
    out[rel] = std::move(text);
  }
  return out;
}

bool workflow(const fs::path& root) {
  const auto s = root.string();
  return cli({"gen", "--scenes", "8", "--height", "48", "--width", "192", "--prevalence", "0.4", "--seed", "9", "--out",
              s + "/gen"}) == 0 &&
         cli({"preprocess", "--in", s + "/gen", "--out", s + "/prep", "--augment", "--seed", "9"}) == 0 &&
         cli({"train", "--model", "simple-cnn", "--epochs", "3", "--data", s + "/prep", "--out", s + "/clf.pfck",
              "--seed", "9"}) == 0 &&
         cli({"train", "--model", "unet-seg", "--epochs", "2", "--unet-width", "8", "--data", s + "/prep", "--out",
              s + "/seg.pfck", "--seed", "9"}) == 0 &&
         cli({"train", "--model", "unet-frp", "--epochs", "2", "--unet-width", "8", "--data", s + "/prep", "--out",
              s + "/frp.pfck", "--seed", "9"}) == 0 &&
         cli({"eval", "--data", s + "/prep", "--classifier", s + "/clf.pfck", "--unet", s + "/seg.pfck", "--out",
              s + "/metrics.json"}) == 0 &&
         cli({"infer", "--scene", s + "/gen/scene_0000.msf", "--classifier", s + "/clf.pfck", "--unet",
              s + "/frp.pfck", "--task", "frp", "--out", s + "/infer/s0"}) == 0 &&
         cli({"bench", "--classifier", s + "/clf.pfck", "--unet", s + "/seg.pfck", "--data", s + "/prep", "--repeats",
              "1", "--warmup", "0", "--top", "3", "--report", s + "/bench.json"}) == 0;
}

Outcome determinism() {
  const auto t0 = Clock::now();
  const auto root = fs::temp_directory_path() / "pyrofocus_acceptance_determinism";
  std::map<std::string, std::string> runs[2];
  for (auto& run : runs) {
    fs::remove_all(root);
    if (!workflow(root)) return {false, "workflow command failed"};
    run = snapshot(root);
  }
  std::size_t differing = 0;
  std::string first;
  for (const auto& [name, text] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != text) {
      if (!differing) first = name;
      ++differing;
    }
  }
  differing += runs[1].size() > runs[0].size() ? runs[1].size() - runs[0].size() : 0;
  return {differing == 0 && runs[0].size() > 10,
          fmt("%zu files compared across two runs, %zu differ%s%s, %.1fs", runs[0].size(), differing,
              first.empty() ? "" : " e.g. ", first.c_str(), since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  // 4 runs before 3 so the latency check can reuse the trained classifier.
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", grad_correctness}, {2, "cascade equivalence", cascade_equivalence},
      {4, "end-to-end learning", end_to_end_learning}, {3, "latency structure", latency_structure},
      {5, "data round trips", round_trips},           {6, "FRP join", frp_join},
      {7, "metric oracles", metric_oracles},          {8, "determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed ? 1 : 0;
}
