#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "pyrofocus/errors.hpp"
#include "pyrofocus/models/unet.hpp"
#include "pyrofocus/pipeline/benchmark.hpp"
#include "pyrofocus/pipeline/cascade.hpp"
#include "pyrofocus/pipeline/metrics.hpp"
#include "pyrofocus/pipeline/report.hpp"
#include "rigged.hpp"

using namespace pyrofocus;
using namespace pyrofocus::pipeline;
using json = nlohmann::json;

namespace {

struct Fixture {
  std::vector<data::Patch> patches;
  data::ScalerParams scaler;
};

Fixture make_fixture(std::size_t scenes = 2) {
  Fixture f;
  for (std::size_t i = 0; i < scenes; ++i) {
    auto t = data::patchify(pftest::random_scene(48, 128, 40 + i), static_cast<std::uint32_t>(i));
    for (auto& p : t.patches) f.patches.push_back(std::move(p));
  }
  f.scaler = data::fit_minmax(data::Partition(data::SplitKind::Train, f.patches));
  return f;
}

models::UNet small_unet(models::UNetHead head) {
  models::UNetSpec s;
  s.base_width = 4;
  s.head = head;
  return models::UNet(s, 2);
}

}  // namespace

TEST(Cascade, AllNoFireSkipsEverything) {
  const auto f = make_fixture();
  const auto unet = small_unet(models::UNetHead::Segmentation);
  const auto r = run_pyrofocus(f.patches, f.scaler, pftest::constant_classifier(0), unet, {});
  EXPECT_EQ(r.routing.unet_invocations, 0u);
  EXPECT_EQ(r.routing.patches_routed, 0u);
  EXPECT_EQ(r.routing.predicted_per_class[0], f.patches.size());
  for (const auto& o : r.outputs) {
    EXPECT_FALSE(o.routed);
    for (auto m : o.mask) ASSERT_EQ(m, 0);
    const std::size_t plane = o.mask.size();
    for (std::size_t i = 0; i < plane; ++i) {
      ASSERT_EQ(o.values[i], 1.0f);
      ASSERT_EQ(o.values[plane + i], 0.0f);
    }
  }
  CascadeConfig frp;
  frp.task = Task::Frp;
  const auto rf = run_pyrofocus(f.patches, f.scaler, pftest::constant_classifier(0), small_unet(models::UNetHead::Frp), frp);
  for (const auto& o : rf.outputs)
    for (auto v : o.values) ASSERT_EQ(v, 0.0f);
}

TEST(Cascade, AllFireEqualsSingleStage) {
  const auto f = make_fixture();
  for (auto task : {Task::Segmentation, Task::Frp}) {
    CascadeConfig cfg;
    cfg.task = task;
    const auto unet = small_unet(task == Task::Frp ? models::UNetHead::Frp : models::UNetHead::Segmentation);
    const auto single = run_single_stage(f.patches, f.scaler, unet, cfg);
    const auto cascade = run_pyrofocus(f.patches, f.scaler, pftest::constant_classifier(2), unet, cfg);
    EXPECT_EQ(single.routing.unet_invocations, f.patches.size());
    EXPECT_EQ(cascade.routing.unet_invocations, f.patches.size());
    EXPECT_EQ(cascade.outputs, single.outputs);
    EXPECT_EQ(cascade.prediction_hash(), single.prediction_hash());
  }
}

TEST(Cascade, MixedRoutingIsPatchwiseEquivalent) {
  const auto f = make_fixture(3);
  const auto clf = pftest::mixed_classifier(f.patches, f.scaler, 0.4);
  const auto unet = small_unet(models::UNetHead::Segmentation);
  const auto single = run_single_stage(f.patches, f.scaler, unet, {});
  const auto r = run_pyrofocus(f.patches, f.scaler, clf, unet, {});
  EXPECT_GT(r.routing.patches_routed, 0u);
  EXPECT_LT(r.routing.patches_routed, f.patches.size());
  for (std::size_t i = 0; i < f.patches.size(); ++i) {
    EXPECT_EQ(r.outputs[i].routed, r.patch_classes[i] != 0);
    if (r.outputs[i].routed) EXPECT_EQ(r.outputs[i], single.outputs[i]);
  }
  // Thread count and batch size change neither routing nor outputs.
  CascadeConfig alt;
  alt.threads = 3;
  alt.batch_size = 1;
  const auto r2 = run_pyrofocus(f.patches, f.scaler, clf, unet, alt);
  EXPECT_EQ(r2.outputs, r.outputs);
  EXPECT_EQ(r2.patch_classes, r.patch_classes);
}

TEST(Cascade, GatingMissRateCountsSkippedFirePixels) {
  const auto f = make_fixture();
  const auto r = run_pyrofocus(f.patches, f.scaler, pftest::constant_classifier(0), small_unet(models::UNetHead::Segmentation), {});
  ASSERT_GT(r.routing.fire_pixels, 0u);
  EXPECT_EQ(r.routing.fire_pixels_missed, r.routing.fire_pixels);
  EXPECT_DOUBLE_EQ(r.routing.gating_miss_rate(), 1.0);
  EXPECT_GE(r.times.overhead_s(), 0.0);
}

TEST(Cascade, ThresholdRouting) {
  const auto f = make_fixture();
  CascadeConfig cfg;
  cfg.routing = RoutingMode::Threshold;
  cfg.threshold = 0.0;  // 1 - P(NoFire) >= 0 always holds
  const auto r = run_pyrofocus(f.patches, f.scaler, pftest::constant_classifier(0), small_unet(models::UNetHead::Segmentation), cfg);
  EXPECT_EQ(r.routing.patches_routed, f.patches.size());
  cfg.threshold = 1.0;
  const auto none = run_pyrofocus(f.patches, f.scaler, pftest::constant_classifier(0), small_unet(models::UNetHead::Segmentation), cfg);
  EXPECT_EQ(none.routing.patches_routed, 0u);
}

TEST(Cascade, ConfigAndCompatibilityErrors) {
  const auto f = make_fixture(1);
  CascadeConfig frp;
  frp.task = Task::Frp;
  EXPECT_THROW(run_single_stage(f.patches, f.scaler, small_unet(models::UNetHead::Segmentation), frp), ConfigError);
  CascadeConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.threshold = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  auto wrong = f.scaler;
  wrong.band_min.pop_back();
  wrong.band_max.pop_back();
  wrong.degenerate.pop_back();
  EXPECT_THROW(run_single_stage(f.patches, wrong, small_unet(models::UNetHead::Segmentation), {}), IncompatibilityError);
  EXPECT_EQ(task_from_string("seg"), Task::Segmentation);
  EXPECT_EQ(task_from_string("frp"), Task::Frp);
  EXPECT_THROW(task_from_string("cls"), UsageError);
}

TEST(SingleStage, FourPatchSceneAndFrpClamp) {
  const auto t = data::patchify(pftest::random_scene(48, 128, 9));
  ASSERT_EQ(t.patches.size(), 4u);
  const auto sc = data::fit_minmax(data::Partition(data::SplitKind::Train, t.patches));
  CascadeConfig cfg;
  cfg.task = Task::Frp;
  const auto r = run_single_stage(t.patches, sc, small_unet(models::UNetHead::Frp), cfg);
  EXPECT_EQ(r.routing.unet_invocations, 4u);
  const auto st = stitch_predictions(t.patches, r.outputs, Task::Frp, 48, 128);
  for (auto v : st.frp) ASSERT_GE(v, 0.0f);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& p = t.patches[k];
    for (std::size_t rr = 0; rr < 24; ++rr)
      for (std::size_t c = 0; c < 64; ++c)
        ASSERT_EQ(st.frp[(p.row + rr) * 128 + p.col + c], r.outputs[k].values[rr * 64 + c]);
  }
  const auto seg = run_single_stage(t.patches, sc, small_unet(models::UNetHead::Segmentation), {});
  const auto sm = stitch_predictions(t.patches, seg.outputs, Task::Segmentation, 50, 130);
  EXPECT_EQ(sm.mask[24 * 130 + 64 + 3], seg.outputs[3].mask[3]);
  EXPECT_EQ(sm.mask[49 * 130 + 129], 0);
}

TEST(Metrics, ConfusionHandExamples) {
  const std::vector<std::uint8_t> labels{0, 0, 1}, preds{0, 1, 1};
  const auto cm = confusion_matrix(preds, labels);
  EXPECT_DOUBLE_EQ(cm.normalized[0], 0.5);
  EXPECT_DOUBLE_EQ(cm.normalized[1], 0.5);
  EXPECT_DOUBLE_EQ(cm.normalized[4], 0.0);
  EXPECT_DOUBLE_EQ(cm.normalized[5], 1.0);
  EXPECT_TRUE(cm.zero_support[2]);
  EXPECT_FALSE(cm.zero_support[0]);
  EXPECT_NEAR(cm.accuracy(), 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(cm.precision(1), 0.5);
  EXPECT_DOUBLE_EQ(cm.recall(0), 0.5);
  const std::vector<std::uint8_t> all{0, 1, 2, 3};
  const auto id = confusion_matrix(all, all);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(id.normalized[i * 4 + j], i == j ? 1.0 : 0.0);
  EXPECT_THROW(confusion_matrix(std::vector<std::uint8_t>{0}, labels), DataError);
  EXPECT_THROW(confusion_matrix(std::vector<std::uint8_t>{0, 4, 1}, labels), LabelError);
}

TEST(Metrics, ConfusionAgreesWithDirectCounts) {
  std::mt19937_64 rng(5);
  std::vector<std::uint8_t> p(10000), l(10000);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = static_cast<std::uint8_t>(rng() % 4);
    l[i] = rng() % 3 ? p[i] : static_cast<std::uint8_t>(rng() % 4);
  }
  const auto cm = confusion_matrix(p, l);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hits += p[i] == l[i];
  EXPECT_NEAR(cm.accuracy(), static_cast<double>(hits) / 10000.0, 1e-12);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 4; ++c) s += cm.normalized[r * 4 + c];
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Metrics, MiouExamplesAndOracle) {
  const std::vector<std::uint8_t> a{0, 1, 1, 0};
  EXPECT_DOUBLE_EQ(miou(a, a), 1.0);
  const std::vector<std::uint8_t> b{1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(miou(b, a), 0.0);
  EXPECT_THROW(miou(std::vector<std::uint8_t>{}, std::vector<std::uint8_t>{}), DataError);
  EXPECT_THROW(miou(a, std::vector<std::uint8_t>{0}), DataError);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> p(24 * 64), t(24 * 64);
    const int k = 2 + trial % 3;  // leave some classes absent
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = static_cast<std::uint8_t>(rng() % k);
      t[i] = static_cast<std::uint8_t>(rng() % k);
    }
    double sum = 0;
    int present = 0;
    for (std::uint8_t c = 0; c < 4; ++c) {
      std::set<std::size_t> ps, ts, inter, uni;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == c) ps.insert(i);
        if (t[i] == c) ts.insert(i);
      }
      std::set_intersection(ps.begin(), ps.end(), ts.begin(), ts.end(), std::inserter(inter, inter.end()));
      std::set_union(ps.begin(), ps.end(), ts.begin(), ts.end(), std::inserter(uni, uni.end()));
      if (uni.empty()) continue;
      sum += static_cast<double>(inter.size()) / static_cast<double>(uni.size());
      ++present;
    }
    EXPECT_NEAR(miou(p, t), sum / present, 1e-12);
  }
}

TEST(Metrics, MaskedMaeExamplesAndOracle) {
  const std::vector<float> t{1.0f, 2.0f, 5.0f}, p{1.1f, 1.7f, 0.0f};
  const std::vector<std::uint8_t> m{1, 1, 0};
  EXPECT_NEAR(masked_mae(p, t, m).value, 0.2, 1e-6);
  EXPECT_EQ(masked_mae(t, t, m).value, 0.0);
  const auto empty = masked_mae(p, t, std::vector<std::uint8_t>(3, 0));
  EXPECT_TRUE(empty.empty_mask);
  EXPECT_EQ(empty.value, 0.0);
  EXPECT_THROW(masked_mae(p, t, std::vector<std::uint8_t>(2, 0)), DataError);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(0.0f, 3.0f);
  std::vector<float> a(500), b(500);
  std::vector<std::uint8_t> mk(500);
  for (std::size_t i = 0; i < 500; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
    mk[i] = rng() % 2;
  }
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 500; ++i)
    if (mk[i]) {
      s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
      ++n;
    }
  EXPECT_NEAR(masked_mae(a, b, mk).value, s / n, 1e-12);
}

TEST(Metrics, EvalMetricsJson) {
  const std::vector<std::uint8_t> p{0, 1, 2, 0}, t{0, 1, 1, 3};
  const auto em = segmentation_metrics(p, t);
  EXPECT_TRUE(em.has_segmentation);
  const auto j = json::parse(em.to_json());
  EXPECT_TRUE(j.contains("confusion"));
  EXPECT_NEAR(j["miou"].get<double>(), em.miou, 1e-15);
  const auto fm = frp_metrics(std::vector<float>{0.5f, 0.2f}, std::vector<float>{0.4f, 0.0f}, std::vector<std::uint8_t>{2, 0});
  EXPECT_NEAR(fm.mae.value, 0.1, 1e-6);
  EXPECT_DOUBLE_EQ(fm.false_positive_rate, 1.0);
}

TEST(Benchmark, SpeedupFormula) {
  EXPECT_NEAR(speedup_percent(2.702, 0.713), 73.6, 0.05);
  EXPECT_DOUBLE_EQ(speedup_percent(1.5, 1.5), 0.0);
  EXPECT_THROW(speedup_percent(0.0, 1.0), ConfigError);
}

TEST(Benchmark, ReportsAreConsistent) {
  const auto f = make_fixture(2);
  std::vector<std::vector<data::Patch>> images{
      std::vector<data::Patch>(f.patches.begin(), f.patches.begin() + 4),
      std::vector<data::Patch>(f.patches.begin() + 4, f.patches.end())};
  const auto clf = pftest::mixed_classifier(f.patches, f.scaler, 0.5);
  BenchOptions o;
  o.repeats = 2;
  o.warmup = 1;
  const auto reports = benchmark(images, f.scaler, clf, small_unet(models::UNetHead::Segmentation), o);
  ASSERT_EQ(reports.size(), 2u);
  const auto& single = reports[0];
  const auto& casc = reports[1];
  EXPECT_EQ(single.pipeline, "single");
  EXPECT_EQ(casc.pipeline, "pyrofocus");
  EXPECT_EQ(casc.baseline, "single");
  EXPECT_EQ(single.patches_routed, single.patches_total);
  EXPECT_LE(casc.patches_routed, casc.patches_total);
  EXPECT_EQ(casc.repeat_totals_s.size(), 2u);
  for (const auto* r : {&single, &casc}) {
    EXPECT_GE(r->stage_totals_mean.overhead_s(), -1e-9);
    EXPECT_NEAR(r->end_to_end_s_mean * 2, r->total_s_mean, 1e-12);
  }
  EXPECT_NEAR(casc.speedup_percent, speedup_percent(single.total_s_mean, casc.total_s_mean), 1e-9);
  const auto fit = fit_cost_model(single, casc);
  EXPECT_NEAR(fit.predicted_s, fit.t_cls_s * casc.patches_total + fit.t_unet_s * casc.patches_routed + fit.overhead_s, 1e-12);
  const auto j = json::parse(bench_reports_json(reports, &fit));
  ASSERT_EQ(j["reports"].size(), 2u);
  for (const char* key : {"pipeline", "baseline", "task", "repeats", "warmup", "threads", "patches_total",
                          "patches_routed", "stage_totals_s", "per_patch_ms", "end_to_end_s_per_image",
                          "speedup_percent", "gating_miss_rate", "prediction_hash"}) {
    EXPECT_TRUE(j["reports"][1].contains(key)) << key;
  }
  EXPECT_TRUE(j["cost_model"].contains("relative_error"));
  BenchOptions bad;
  bad.repeats = 0;
  EXPECT_THROW(benchmark(images, f.scaler, clf, small_unet(models::UNetHead::Segmentation), bad), ConfigError);
}

TEST(Report, SweepCsv) {
  BenchReport r;
  r.pipeline = "pyrofocus";
  r.patches_total = 90;
  r.patches_routed = 9;
  r.end_to_end_s_mean = 0.25;
  r.speedup_percent = 61.5;
  const std::vector<SweepRow> rows{sweep_row(r, 0.1)};
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSweepCsvHeader);
  EXPECT_NE(csv.find("pyrofocus,seg,0.1,90,9,0.25,61.5"), std::string::npos) << csv;
  EXPECT_THROW(write_text("/nonexistent/dir/x.csv", csv), UsageError);
}
