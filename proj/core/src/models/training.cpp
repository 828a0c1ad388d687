#include "pyrofocus/models/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pyrofocus/errors.hpp"
#include "pyrofocus/numerics/adam.hpp"

namespace pyrofocus::models {

FTensor stack_patches(std::span<const data::Patch* const> patches) {
  if (patches.empty()) throw DataError("cannot stack an empty patch list");
  const auto& first = *patches.front();
  const std::size_t per = first.channels * first.height * first.width;
  std::vector<float> values;
  values.reserve(per * patches.size());
  for (const auto* p : patches) {
    if (p->channels != first.channels || p->height != first.height || p->width != first.width ||
        p->data.size() != per) {
      throw DataError("patches in a batch must share C x H x W");
    }
    values.insert(values.end(), p->data.begin(), p->data.end());
  }
  return FTensor({patches.size(), first.channels, first.height, first.width}, std::move(values));
}

namespace {

void check_inputs(const data::Partition& train, const data::Partition& val, const TrainOptions& o) {
  if (train.empty()) throw DataError("training split is empty");
  if (val.empty()) throw DataError("validation split is empty");
  if (o.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (o.batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(o.lr > 0.0)) throw ConfigError("learning rate must be positive");
}

std::vector<const data::Patch*> gather(const std::vector<data::Patch>& patches, std::span<const std::size_t> idx) {
  std::vector<const data::Patch*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&patches[i]);
  return out;
}

FTensor probe_batch(const data::Partition& val) {
  const std::size_t n = std::min<std::size_t>(2, val.size());
  std::vector<const data::Patch*> ptrs;
  for (std::size_t i = 0; i < n; ++i) ptrs.push_back(&val.patches()[i]);
  return stack_patches(ptrs);
}

/// Model-specific pieces of the shared loop.
template <typename Model>
struct Task {
  // Loss over a batch; `correct`/`metric_weight` accumulate the validation metric.
  std::function<FTensor(const Model&, std::span<const data::Patch* const>, nn::Mode, double& metric_sum,
                        double& metric_weight)>
      loss;
  std::string metric_name;
  bool metric_is_mean = true;
};

template <typename Model>
Checkpoint fit(Model& model, const Task<Model>& task, const data::Partition& train, const data::Partition& val,
               const data::ScalerParams& scaler, const TrainOptions& o) {
  check_inputs(train, val, o);
  auto& params = model.parameters();
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = o.lr;
  auto adam = nn::AdamState<float>::initialize(params.trainable(), adam_cfg);
  std::mt19937_64 shuffle_rng(o.seed ^ 0x5eedf00dull);

  std::vector<std::size_t> order(train.size());
  std::vector<std::size_t> val_order(val.size());
  std::iota(val_order.begin(), val_order.end(), 0);

  std::vector<HistoryRecord> history;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<NamedTensor> best_state = params.export_state();
  int best_epoch = 0;

  for (int epoch = 1; epoch <= o.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += o.batch_size) {
      const auto end = std::min(order.size(), start + o.batch_size);
      const auto batch = gather(train.patches(), std::span(order).subspan(start, end - start));
      double ms = 0, mw = 0;
      params.zero_grad();
      auto loss = task.loss(model, batch, nn::Mode::Train, ms, mw);
      loss.backward();
      nn::adam_step<float>(params.trainable(), adam);
      train_sum += static_cast<double>(loss.item()) * static_cast<double>(batch.size());
    }

    double val_sum = 0.0, metric_sum = 0.0, metric_weight = 0.0;
    {
      nn::NoGradGuard guard;
      for (std::size_t start = 0; start < val_order.size(); start += o.batch_size) {
        const auto end = std::min(val_order.size(), start + o.batch_size);
        const auto batch = gather(val.patches(), std::span(val_order).subspan(start, end - start));
        auto loss = task.loss(model, batch, nn::Mode::Eval, metric_sum, metric_weight);
        val_sum += static_cast<double>(loss.item()) * static_cast<double>(batch.size());
      }
    }
    HistoryRecord rec{epoch, train_sum / static_cast<double>(train.size()), val_sum / static_cast<double>(val.size()),
                      metric_weight > 0 ? metric_sum / metric_weight : 0.0};
    history.push_back(rec);
    if (o.on_epoch) o.on_epoch(rec);
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best_state = params.export_state();
      best_epoch = epoch;
    }
  }

  params.import_state(best_state);
  auto ckpt = make_checkpoint(model, scaler, probe_batch(val));
  ckpt.history = std::move(history);
  ckpt.best_epoch = best_epoch;
  ckpt.val_metric_name = task.metric_name;
  return ckpt;
}

void pixel_targets(std::span<const data::Patch* const> batch, std::vector<std::int32_t>* labels,
                   std::vector<float>* frp, std::vector<std::uint8_t>* mask) {
  for (const auto* p : batch) {
    for (std::size_t i = 0; i < p->class_mask.size(); ++i) {
      if (labels) labels->push_back(p->class_mask[i]);
      if (frp) frp->push_back(p->frp[i]);
      if (mask) mask->push_back(p->class_mask[i] != 0 ? 1 : 0);
    }
  }
}

}  // namespace

Checkpoint train_classifier(const data::Partition& train, const data::Partition& val, const ClassifierSpec& spec,
                            const data::ScalerParams& scaler, const TrainOptions& options) {
  check_inputs(train, val, options);
  Classifier model(spec, options.seed);
  Task<Classifier> task;
  task.metric_name = "accuracy";
  task.loss = [](const Classifier& m, std::span<const data::Patch* const> batch, nn::Mode mode, double& ms,
                 double& mw) {
    std::vector<std::int32_t> labels;
    for (const auto* p : batch) labels.push_back(static_cast<std::int32_t>(p->label));
    auto logits = m.forward(stack_patches(batch), mode);
    if (mode == nn::Mode::Eval) {
      const auto v = logits.values();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = v.subspan(i * 4, 4);
        const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
        ms += arg == labels[i] ? 1.0 : 0.0;
        mw += 1.0;
      }
    }
    return nn::softmax_cross_entropy<float>(logits, labels);
  };
  return fit(model, task, train, val, scaler, options);
}

Checkpoint train_unet(const data::Partition& train, const data::Partition& val, const UNetSpec& spec,
                      const data::ScalerParams& scaler, const TrainOptions& options) {
  check_inputs(train, val, options);
  options.frp_loss.validate();
  UNet model(spec, options.seed);
  Task<UNet> task;
  const auto frp_cfg = options.frp_loss;
  if (spec.head == UNetHead::Segmentation) {
    task.metric_name = "pixel_accuracy";
    task.loss = [](const UNet& m, std::span<const data::Patch* const> batch, nn::Mode mode, double& ms, double& mw) {
      std::vector<std::int32_t> labels;
      pixel_targets(batch, &labels, nullptr, nullptr);
      const std::size_t n = batch.size(), h = batch[0]->height, w = batch[0]->width;
      auto out = m.forward(stack_patches(batch), mode);
      auto loss = nn::softmax_cross_entropy<float>(out.main, labels);
      for (std::size_t k = 0; k < out.aux.size(); ++k) {
        const std::size_t factor = std::size_t{2} << k;
        const auto ds = downsample_labels(labels, n, h, w, factor);
        const float weight = static_cast<float>(std::ldexp(1.0, -static_cast<int>(k + 1)));
        loss = nn::add(loss, nn::scale(nn::softmax_cross_entropy<float>(out.aux[k], ds), weight));
      }
      if (mode == nn::Mode::Eval) {
        const auto v = out.main.values();
        const std::size_t plane = h * w;
        for (std::size_t s = 0; s < n; ++s) {
          for (std::size_t i = 0; i < plane; ++i) {
            std::int32_t arg = 0;
            for (std::int32_t c = 1; c < 4; ++c) {
              if (v[(s * 4 + c) * plane + i] > v[(s * 4 + arg) * plane + i]) arg = c;
            }
            ms += arg == labels[s * plane + i] ? 1.0 : 0.0;
            mw += 1.0;
          }
        }
      }
      return loss;
    };
  } else {
    task.metric_name = "masked_mae";
    task.loss = [frp_cfg](const UNet& m, std::span<const data::Patch* const> batch, nn::Mode mode, double& ms,
                          double& mw) {
      std::vector<float> frp;
      std::vector<std::uint8_t> mask;
      pixel_targets(batch, nullptr, &frp, &mask);
      const std::size_t n = batch.size(), h = batch[0]->height, w = batch[0]->width;
      auto out = m.forward(stack_patches(batch), mode);
      auto loss = frp_loss<float>(out.main, frp, mask, frp_cfg);
      for (std::size_t k = 0; k < out.aux.size(); ++k) {
        std::vector<float> ds_frp;
        std::vector<std::uint8_t> ds_mask;
        downsample_frp(frp, mask, n, h, w, std::size_t{2} << k, ds_frp, ds_mask);
        const float weight = static_cast<float>(std::ldexp(1.0, -static_cast<int>(k + 1)));
        loss = nn::add(loss, nn::scale(frp_loss<float>(out.aux[k], ds_frp, ds_mask, frp_cfg), weight));
      }
      if (mode == nn::Mode::Eval) {
        const auto v = out.main.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!mask[i]) continue;
          ms += std::abs(static_cast<double>(std::max(v[i], 0.0f)) - frp[i]);
          mw += 1.0;
        }
      }
      return loss;
    };
  }
  return fit(model, task, train, val, scaler, options);
}

}  // namespace pyrofocus::models
