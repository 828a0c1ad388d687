#include "pyrofocus/models/losses.hpp"

#include <array>
#include <cmath>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::models {

void FrpLossConfig::validate() const {
  if (!(alpha > 0.0) || beta < 0.0 || gamma < 0.0) {
    throw ConfigError("FRP loss weights must satisfy alpha > 0, beta >= 0, gamma >= 0");
  }
}

template <typename T>
nn::Tensor<T> frp_loss(const nn::Tensor<T>& pred, std::span<const T> target, std::span<const std::uint8_t> fire_mask,
                       const FrpLossConfig& config) {
  config.validate();
  if (pred.rank() != 4 || pred.dim(1) != 1) {
    throw DimensionError("frp_loss expects pred [N,1,H,W], got " + nn::to_string(pred.shape()));
  }
  const std::size_t n = pred.size();
  if (target.size() != n || fire_mask.size() != n) {
    throw DimensionError("frp_loss: target/mask size " + std::to_string(target.size()) + "/" +
                         std::to_string(fire_mask.size()) + " does not match prediction size " + std::to_string(n));
  }
  std::size_t fire = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(target[i])) || target[i] < T{0}) {
      throw DataError("frp_loss: target must be finite and non-negative (index " + std::to_string(i) + ")");
    }
    if (fire_mask[i]) ++fire;
  }
  const std::size_t nonfire = n - fire;
  const auto p = pred.values();
  const T wa = fire ? static_cast<T>(config.alpha / static_cast<double>(fire)) : T{0};
  const T wb = static_cast<T>(config.beta / static_cast<double>(n));
  const T wg = nonfire ? static_cast<T>(config.gamma / static_cast<double>(nonfire)) : T{0};
  T mae = 0, mse = 0, fp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T e = p[i] - target[i];
    mse += e * e;
    if (fire_mask[i]) {
      mae += std::abs(e);
    } else if (p[i] > T{0}) {
      fp += p[i];
    }
  }
  const T loss = wa * mae + wb * mse + wg * fp;
  std::vector<T> tgt(target.begin(), target.end());
  std::vector<std::uint8_t> mask(fire_mask.begin(), fire_mask.end());
  return nn::detail::make_result<T>({}, {loss}, {pred},
                                    [tgt = std::move(tgt), mask = std::move(mask), wa, wb, wg](nn::detail::Node<T>& out) {
                                      auto& in = *out.inputs[0];
                                      if (!in.requires_grad) return;
                                      in.ensure_grad();
                                      const T g = out.grad[0];
                                      for (std::size_t i = 0; i < in.value.size(); ++i) {
                                        const T e = in.value[i] - tgt[i];
                                        T d = T{2} * wb * e;
                                        if (mask[i]) {
                                          d += wa * (e > T{0} ? T{1} : (e < T{0} ? T{-1} : T{0}));
                                        } else if (in.value[i] > T{0}) {
                                          d += wg;
                                        }
                                        in.grad[i] += g * d;
                                      }
                                    });
}

template nn::Tensor<float> frp_loss(const nn::Tensor<float>&, std::span<const float>, std::span<const std::uint8_t>,
                                    const FrpLossConfig&);
template nn::Tensor<double> frp_loss(const nn::Tensor<double>&, std::span<const double>,
                                     std::span<const std::uint8_t>, const FrpLossConfig&);

namespace {

void check_factor(std::size_t h, std::size_t w, std::size_t factor) {
  if (factor == 0 || h % factor != 0 || w % factor != 0) {
    throw DimensionError("cannot downsample " + std::to_string(h) + "x" + std::to_string(w) + " by " +
                         std::to_string(factor));
  }
}

}  // namespace

std::vector<std::int32_t> downsample_labels(std::span<const std::int32_t> labels, std::size_t n, std::size_t h,
                                            std::size_t w, std::size_t factor) {
  check_factor(h, w, factor);
  if (labels.size() != n * h * w) throw DimensionError("downsample_labels: label count mismatch");
  const std::size_t oh = h / factor, ow = w / factor;
  std::vector<std::int32_t> out(n * oh * ow);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        std::array<std::size_t, 4> votes{};
        for (std::size_t i = 0; i < factor; ++i) {
          for (std::size_t j = 0; j < factor; ++j) {
            const auto v = labels[(s * h + r * factor + i) * w + c * factor + j];
            if (v < 0 || v > 3) throw LabelError("label " + std::to_string(v) + " outside [0,4)");
            ++votes[static_cast<std::size_t>(v)];
          }
        }
        std::int32_t best = 0;
        for (std::int32_t k = 1; k < 4; ++k) {
          if (votes[static_cast<std::size_t>(k)] >= votes[static_cast<std::size_t>(best)]) best = k;
        }
        out[(s * oh + r) * ow + c] = best;
      }
    }
  }
  return out;
}

void downsample_frp(std::span<const float> frp, std::span<const std::uint8_t> fire_mask, std::size_t n,
                    std::size_t h, std::size_t w, std::size_t factor, std::vector<float>& frp_out,
                    std::vector<std::uint8_t>& mask_out) {
  check_factor(h, w, factor);
  if (frp.size() != n * h * w || fire_mask.size() != n * h * w) {
    throw DimensionError("downsample_frp: plane size mismatch");
  }
  const std::size_t oh = h / factor, ow = w / factor;
  frp_out.assign(n * oh * ow, 0.0f);
  mask_out.assign(n * oh * ow, 0);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        double sum = 0.0;
        std::uint8_t any = 0;
        for (std::size_t i = 0; i < factor; ++i) {
          for (std::size_t j = 0; j < factor; ++j) {
            const auto idx = (s * h + r * factor + i) * w + c * factor + j;
            sum += frp[idx];
            any |= fire_mask[idx] ? 1 : 0;
          }
        }
        frp_out[(s * oh + r) * ow + c] = static_cast<float>(sum * inv);
        mask_out[(s * oh + r) * ow + c] = any;
      }
    }
  }
}

}  // namespace pyrofocus::models
