#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "pyrofocus/errors.hpp"
#include "pyrofocus/models/checkpoint.hpp"
#include "pyrofocus/models/classifier.hpp"
#include "pyrofocus/models/losses.hpp"
#include "pyrofocus/models/training.hpp"
#include "pyrofocus/models/unet.hpp"

using namespace pyrofocus;
using models::FTensor;

namespace {

constexpr std::size_t kH = data::kPatchHeight, kW = data::kPatchWidth;

FTensor random_batch(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n * c * kH * kW);
  for (auto& x : v) x = d(rng);
  return FTensor({n, c, kH, kW}, std::move(v));
}

data::ScalerParams unit_scaler(std::size_t c) {
  data::ScalerParams s;
  s.band_min.assign(c, 0.0f);
  s.band_max.assign(c, 1.0f);
  s.degenerate.assign(c, false);
  s.frp_max = 1.0f;
  s.frp_degenerate = false;
  return s;
}

// Patches with one rectangle per class; channel k is high where the pixel is
// class k, so per-pixel classes are locally visible.
std::vector<data::Patch> blob_patches(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> noise(0.0f, 0.1f);
  std::vector<data::Patch> out;
  for (std::size_t i = 0; i < n; ++i) {
    data::Patch p;
    p.scene_id = static_cast<std::uint32_t>(i);
    p.channels = c;
    p.class_mask.assign(kH * kW, 0);
    p.frp.assign(kH * kW, 0.0f);
    for (std::uint8_t k = 1; k < 4; ++k) {
      const std::size_t r0 = rng() % (kH - 6), c0 = (k - 1) * 20 + rng() % 10;
      for (std::size_t r = r0; r < r0 + 5; ++r)
        for (std::size_t q = c0; q < c0 + 6; ++q) {
          p.class_mask[r * kW + q] = k;
          p.frp[r * kW + q] = 0.2f * k;
        }
    }
    p.data.resize(c * kH * kW);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t j = 0; j < kH * kW; ++j)
        p.data[ch * kH * kW + j] = noise(rng) + (p.class_mask[j] == ch % 4 ? 0.8f : 0.0f);
    p.label = data::patch_label(p.class_mask);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST(Classifier, SimpleCnnShapeAndBudget) {
  models::Classifier m({"simple_cnn", 9, 4}, 1);
  EXPECT_LE(m.parameter_count(), 2'000'000u);
  EXPECT_GT(m.parameter_count(), 0u);
  EXPECT_EQ(m.forward(random_batch(5, 9, 2), nn::Mode::Eval).shape(), (nn::Shape{5, 4}));
}

TEST(Classifier, ResnetLiteShapeAndBudget) {
  models::Classifier m({"resnet_lite", 9, 4}, 1);
  EXPECT_LE(m.parameter_count(), 7'000'000u);
  EXPECT_GT(m.parameter_count(), 2'000'000u);
  EXPECT_EQ(m.forward(random_batch(5, 9, 2), nn::Mode::Eval).shape(), (nn::Shape{5, 4}));
}

TEST(Classifier, RejectsBadSpecAndInput) {
  EXPECT_THROW(models::Classifier({"vit", 9, 4}), ConfigError);
  EXPECT_THROW(models::Classifier({"simple_cnn", 0, 4}), ConfigError);
  models::Classifier m({"simple_cnn", 9, 4});
  EXPECT_THROW(m.forward(random_batch(2, 8, 1), nn::Mode::Eval), DimensionError);
}

TEST(Classifier, EvalOutputsIndependentOfBatchComposition) {
  models::Classifier m({"simple_cnn", 9, 4}, 3);
  const auto batch = random_batch(4, 9, 5);
  const auto all = m.forward(batch, nn::Mode::Eval);
  const std::size_t per = 9 * kH * kW;
  std::vector<float> reversed;
  for (std::size_t i = 4; i-- > 0;)
    reversed.insert(reversed.end(), batch.values().begin() + i * per, batch.values().begin() + (i + 1) * per);
  const auto rev = m.forward(FTensor({4, 9, kH, kW}, reversed), nn::Mode::Eval);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(all.values()[i * 4 + k], rev.values()[(3 - i) * 4 + k]);
}

TEST(Classifier, SpecJsonRoundTrip) {
  const models::ClassifierSpec s{"resnet_lite", 7, 4};
  EXPECT_EQ(models::ClassifierSpec::from_json(s.to_json()), s);
}

TEST(UNet, SegmentationOutputsAndAux) {
  models::UNetSpec spec;
  spec.base_width = 8;
  models::UNet m(spec, 4);
  const auto x = random_batch(2, 9, 6);
  const auto out = m.forward(x, nn::Mode::Eval);
  EXPECT_EQ(out.main.shape(), (nn::Shape{2, 4, kH, kW}));
  ASSERT_EQ(out.aux.size(), 2u);
  EXPECT_EQ(out.aux[0].shape(), (nn::Shape{2, 4, kH / 2, kW / 2}));
  EXPECT_EQ(out.aux[1].shape(), (nn::Shape{2, 4, kH / 4, kW / 4}));
  const auto p = m.infer(x);
  const std::size_t plane = kH * kW;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < plane; ++i) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        const float v = p.values()[(n * 4 + k) * plane + i];
        EXPECT_GE(v, 0.0f);
        s += v;
      }
      ASSERT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(UNet, EveryDepthRestoresInputSize) {
  for (int depth = 1; depth <= 3; ++depth) {
    models::UNetSpec spec;
    spec.base_width = 4;
    spec.depth = depth;
    spec.deep_supervision = false;
    models::UNet m(spec, 1);
    const auto out = m.forward(random_batch(1, 9, 2), nn::Mode::Eval);
    EXPECT_EQ(out.main.shape(), (nn::Shape{1, 4, kH, kW})) << depth;
    EXPECT_TRUE(out.aux.empty());
  }
  models::UNetSpec bad;
  bad.depth = 4;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.depth = 0;
  EXPECT_THROW(models::UNet{bad}, ConfigError);
}

TEST(UNet, FrpInferenceIsClamped) {
  models::UNetSpec spec;
  spec.base_width = 4;
  spec.head = models::UNetHead::Frp;
  models::UNet m(spec, 9);
  const auto x = random_batch(2, 9, 3);
  const auto raw = m.forward(x, nn::Mode::Eval).main;
  const auto y = m.infer(x);
  ASSERT_EQ(y.shape(), (nn::Shape{2, 1, kH, kW}));
  bool any_negative = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_GE(y.values()[i], 0.0f);
    EXPECT_EQ(y.values()[i], std::max(raw.values()[i], 0.0f));
    any_negative |= raw.values()[i] < 0.0f;
  }
  EXPECT_TRUE(any_negative);
}

TEST(UNet, HeadNamesAndSpecJson) {
  EXPECT_EQ(models::unet_head_from_string("frp"), models::UNetHead::Frp);
  EXPECT_EQ(models::unet_head_from_string("seg"), models::UNetHead::Segmentation);
  EXPECT_THROW(models::unet_head_from_string("depth"), ConfigError);
  models::UNetSpec s;
  s.head = models::UNetHead::Frp;
  s.base_width = 12;
  s.depth = 2;
  EXPECT_EQ(models::UNetSpec::from_json(s.to_json()), s);
}

TEST(FrpLoss, ExactMatchIsZero) {
  const std::vector<float> target{0.5f, 0.0f, 0.2f, 0.0f};
  const std::vector<std::uint8_t> mask{1, 0, 1, 0};
  FTensor pred({1, 1, 2, 2}, {0.5f, 0.0f, 0.2f, 0.0f});
  EXPECT_EQ(models::frp_loss<float>(pred, target, mask).item(), 0.0f);
}

TEST(FrpLoss, EmptyMaskAllZero) {
  const std::vector<double> target(4, 0.0);
  const std::vector<std::uint8_t> mask(4, 0);
  EXPECT_EQ(models::frp_loss<double>(nn::Tensor<double>::zeros({1, 1, 2, 2}), target, mask).item(), 0.0);
}

TEST(FrpLoss, HandEvaluatedExample) {
  // Two fire pixels with errors 0.1 and 0.3, one non-fire pixel predicting 0.2, one exact.
  const std::vector<double> target{1.0, 2.0, 0.0, 0.0};
  const std::vector<std::uint8_t> mask{1, 1, 0, 0};
  nn::Tensor<double> pred({1, 1, 2, 2}, {1.1, 1.7, 0.2, 0.0});
  const double mae = (0.1 + 0.3) / 2.0;
  const double mse = (0.01 + 0.09 + 0.04 + 0.0) / 4.0;
  const double fp = (0.2 + 0.0) / 2.0;
  EXPECT_NEAR(mae, 0.2, 1e-15);
  EXPECT_NEAR(models::frp_loss<double>(pred, target, mask).item(), 1.0 * mae + 0.1 * mse + 0.5 * fp, 1e-12);
  models::FrpLossConfig cfg{2.0, 0.0, 0.0};
  EXPECT_NEAR(models::frp_loss<double>(pred, target, mask, cfg).item(), 2.0 * mae, 1e-12);
}

TEST(FrpLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> pv(24), target(24);
  std::vector<std::uint8_t> mask(24);
  for (std::size_t i = 0; i < 24; ++i) {
    pv[i] = d(rng);
    if (std::abs(pv[i]) < 0.05) pv[i] = 0.2;
    mask[i] = i % 3 == 0;
    target[i] = mask[i] ? std::abs(d(rng)) : 0.0;
    if (mask[i] && std::abs(pv[i] - target[i]) < 0.05) pv[i] += 0.2;
  }
  nn::Tensor<double> pred({2, 1, 3, 4}, pv, true);
  models::frp_loss<double>(pred, target, mask).backward();
  for (std::size_t i = 0; i < 24; ++i) {
    const double h = 1e-5;
    auto at = [&](double v) {
      auto q = pv;
      q[i] = v;
      return models::frp_loss<double>(nn::Tensor<double>({2, 1, 3, 4}, q), target, mask).item();
    };
    const double num = (at(pv[i] + h) - at(pv[i] - h)) / (2 * h);
    EXPECT_NEAR(pred.grad()[i], num, 1e-6 * std::max(1.0, std::abs(num)));
  }
}

TEST(FrpLoss, RejectsBadTargetsAndConfig) {
  const std::vector<std::uint8_t> mask(4, 1);
  const auto pred = FTensor::zeros({1, 1, 2, 2});
  EXPECT_THROW(models::frp_loss<float>(pred, std::vector<float>(4, NAN), mask), DataError);
  EXPECT_THROW(models::frp_loss<float>(pred, std::vector<float>{0, 0, -1, 0}, mask), DataError);
  EXPECT_THROW(models::frp_loss<float>(pred, std::vector<float>(3, 0.0f), mask), DimensionError);
  EXPECT_THROW((models::FrpLossConfig{0.0, 0.1, 0.5}.validate()), ConfigError);
  EXPECT_THROW((models::FrpLossConfig{1.0, -0.1, 0.5}.validate()), ConfigError);
}

TEST(Downsample, MajorityWithSevereTies) {
  // 2x2 blocks: {0,0,0,1} -> 0, {1,1,2,2} -> 2 (tie, higher wins)
  const std::vector<std::int32_t> labels{0, 0, 1, 1, 0, 1, 2, 2};
  EXPECT_EQ(models::downsample_labels(labels, 1, 2, 4, 2), (std::vector<std::int32_t>{0, 2}));
  std::vector<float> frp_out;
  std::vector<std::uint8_t> mask_out;
  models::downsample_frp(std::vector<float>{0, 0, 4, 0, 0, 0, 0, 0}, std::vector<std::uint8_t>{0, 0, 1, 0, 0, 0, 0, 0},
                         1, 2, 4, 2, frp_out, mask_out);
  EXPECT_EQ(frp_out, (std::vector<float>{0.0f, 1.0f}));
  EXPECT_EQ(mask_out, (std::vector<std::uint8_t>{0, 1}));
}

TEST(ParameterSet, ImportRejectsMismatch) {
  models::Classifier a({"simple_cnn", 9, 4}, 1);
  auto state = a.parameters().export_state();
  state.front().shape.back() += 1;
  EXPECT_THROW(a.parameters().import_state(state), IncompatibilityError);
  state = a.parameters().export_state();
  state.pop_back();
  EXPECT_THROW(a.parameters().import_state(state), IncompatibilityError);
}

TEST(Checkpoint, RoundTripReproducesProbe) {
  models::Classifier m({"simple_cnn", 9, 4}, 11);
  const auto probe = random_batch(2, 9, 12);
  auto ck = models::make_checkpoint(m, unit_scaler(9), probe);
  ck.history = {{1, 0.5, 0.6, 0.7}, {2, 0.4, 0.5, 0.8}};
  ck.best_epoch = 2;
  const auto bytes = ck.encode();
  const auto back = models::Checkpoint::decode(bytes);
  EXPECT_EQ(back.encode(), bytes);
  EXPECT_EQ(back.history, ck.history);
  const auto loaded = models::load_classifier(back);
  const auto y = loaded.forward(probe, nn::Mode::Eval);
  ASSERT_EQ(y.size(), back.probe_output.values.size());
  EXPECT_EQ(0, std::memcmp(y.values().data(), back.probe_output.values.data(), y.size() * sizeof(float)));
  EXPECT_EQ(back.history_csv(), "epoch,train_loss,val_loss,val_metric\n1,0.5,0.6,0.7\n2,0.4,0.5,0.8\n");
}

TEST(Checkpoint, UNetRoundTrip) {
  models::UNetSpec spec;
  spec.base_width = 4;
  spec.head = models::UNetHead::Frp;
  models::UNet m(spec, 5);
  const auto ck = models::make_checkpoint(m, unit_scaler(9), random_batch(1, 9, 3));
  const auto loaded = models::load_unet(models::Checkpoint::decode(ck.encode()));
  EXPECT_EQ(loaded.spec(), spec);
  EXPECT_THROW(models::load_classifier(ck), ConfigError);
}

TEST(Checkpoint, DetectsCorruption) {
  models::Classifier m({"simple_cnn", 9, 4}, 11);
  auto ck = models::make_checkpoint(m, unit_scaler(9), random_batch(1, 9, 12));
  auto tampered = ck;
  tampered.probe_output.values[0] += 1.0f;
  EXPECT_THROW(models::load_classifier(tampered), FormatError);
  auto bytes = ck.encode();
  bytes[0] = 'X';
  EXPECT_THROW(models::Checkpoint::decode(bytes), FormatError);
  bytes = ck.encode();
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(models::Checkpoint::decode(bytes), FormatError);
}

TEST(Training, ClassifierOverfitsOneBatch) {
  auto patches = blob_patches(8, 9, 1);
  for (std::size_t i = 0; i < patches.size(); ++i) patches[i].label = static_cast<data::FireClass>(i % 4);
  data::Partition train(data::SplitKind::Train, patches), val(data::SplitKind::Val, patches);
  auto opt = models::TrainOptions::classifier_defaults();
  opt.epochs = 200;
  opt.seed = 3;
  const auto ck = models::train_classifier(train, val, {"simple_cnn", 9, 4}, unit_scaler(9), opt);
  ASSERT_EQ(ck.history.size(), 200u);
  EXPECT_LT(ck.history.back().train_loss, 0.01);
}

TEST(Training, SegmentationOverfitsOneBatch) {
  const auto patches = blob_patches(4, 9, 2);
  data::Partition train(data::SplitKind::Train, patches), val(data::SplitKind::Val, patches);
  models::UNetSpec spec;
  spec.base_width = 8;
  auto opt = models::TrainOptions::unet_defaults();
  opt.epochs = 200;
  opt.seed = 4;
  const auto ck = models::train_unet(train, val, spec, unit_scaler(9), opt);
  EXPECT_EQ(ck.val_metric_name, "pixel_accuracy");
  double best = 0;
  for (const auto& h : ck.history) best = std::max(best, h.val_metric);
  EXPECT_GT(best, 0.99);
}

TEST(Training, FrpBeatsZeroPredictor) {
  const auto patches = blob_patches(4, 9, 3);
  data::Partition train(data::SplitKind::Train, patches), val(data::SplitKind::Val, patches);
  models::UNetSpec spec;
  spec.base_width = 4;
  spec.head = models::UNetHead::Frp;
  spec.deep_supervision = false;
  auto opt = models::TrainOptions::unet_defaults();
  opt.epochs = 60;
  const auto ck = models::train_unet(train, val, spec, unit_scaler(9), opt);
  std::vector<float> target;
  std::vector<std::uint8_t> mask;
  for (const auto& p : patches) {
    target.insert(target.end(), p.frp.begin(), p.frp.end());
    for (auto c : p.class_mask) mask.push_back(c != 0);
  }
  const double zero = models::frp_loss<float>(FTensor::zeros({4, 1, kH, kW}), target, mask).item();
  EXPECT_LT(ck.history.back().train_loss, zero);
}

TEST(Training, SameSeedGivesIdenticalCheckpoints) {
  const auto patches = blob_patches(6, 9, 4);
  data::Partition train(data::SplitKind::Train, patches), val(data::SplitKind::Val, patches);
  auto opt = models::TrainOptions::classifier_defaults();
  opt.epochs = 2;
  opt.batch_size = 4;
  opt.seed = 9;
  const auto a = models::train_classifier(train, val, {"simple_cnn", 9, 4}, unit_scaler(9), opt);
  const auto b = models::train_classifier(train, val, {"simple_cnn", 9, 4}, unit_scaler(9), opt);
  EXPECT_EQ(a.encode(), b.encode());
  models::UNetSpec spec;
  spec.base_width = 4;
  auto uo = models::TrainOptions::unet_defaults();
  uo.epochs = 2;
  uo.batch_size = 4;
  EXPECT_EQ(models::train_unet(train, val, spec, unit_scaler(9), uo).encode(),
            models::train_unet(train, val, spec, unit_scaler(9), uo).encode());
}

TEST(Training, RejectsEmptySplitsAndBadOptions) {
  const auto patches = blob_patches(2, 9, 5);
  data::Partition train(data::SplitKind::Train, patches), empty(data::SplitKind::Val, {});
  auto opt = models::TrainOptions::classifier_defaults();
  opt.epochs = 1;
  EXPECT_THROW(models::train_classifier(train, empty, {}, unit_scaler(9), opt), DataError);
  opt.epochs = 0;
  EXPECT_THROW(models::train_classifier(train, train, {}, unit_scaler(9), opt), ConfigError);
}
