#include "pyrofocus/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::nn {

namespace {

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
  if (!t.defined() || t.rank() != rank) {
    throw DimensionError(std::string(what) + " must be rank " + std::to_string(rank) + ", got " +
                         (t.defined() ? to_string(t.shape()) : std::string("undefined")));
  }
}

template <typename T>
void require_vector(const Tensor<T>& t, std::size_t length, const char* what) {
  if (!t.defined() || t.rank() != 1 || t.dim(0) != length) {
    throw DimensionError(std::string(what) + " must have shape [" + std::to_string(length) + "]");
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename T>
T activation_grad(T x, Activation kind) {
  switch (kind) {
    case Activation::ReLU:
      return x > T{0} ? T{1} : T{0};
    case Activation::LeakyReLU:
      return x > T{0} ? T{1} : static_cast<T>(kLeakySlope);
    case Activation::GELU: {
      const T u = static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x);
      const T t = std::tanh(u);
      const T du = static_cast<T>(kGeluC) * (T{1} + T{3} * static_cast<T>(kGeluA) * x * x);
      return T{0.5} * (T{1} + t) + T{0.5} * x * (T{1} - t * t) * du;
    }
    case Activation::HSwish:
      if (x <= T{-3}) return T{0};
      if (x >= T{3}) return T{1};
      return (T{2} * x + T{3}) / T{6};
  }
  return T{0};
}

}  // namespace

template <typename T>
T activation_value(T x, Activation kind) {
  switch (kind) {
    case Activation::ReLU:
      return x > T{0} ? x : T{0};
    case Activation::LeakyReLU:
      return x > T{0} ? x : static_cast<T>(kLeakySlope) * x;
    case Activation::GELU: {
      const T u = static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x);
      return T{0.5} * x * (T{1} + std::tanh(u));
    }
    case Activation::HSwish:
      return x * std::clamp(x + T{3}, T{0}, T{6}) / T{6};
  }
  return x;
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormStats<T>& stats, Mode mode, const BatchNormConfig& config) {
  require_rank(input, 4, "batchnorm2d input");
  const auto n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  require_vector(gamma, c, "batchnorm2d gamma");
  require_vector(beta, c, "batchnorm2d beta");
  if (stats.running_mean.size() != c || stats.running_var.size() != c) {
    throw DimensionError("batchnorm2d running statistics do not match " + std::to_string(c) + " channels");
  }
  const auto count = n * plane;
  const T eps = static_cast<T>(config.eps);
  const T* x = input.values().data();
  const T* g = gamma.values().data();
  const T* b = beta.values().data();
  std::vector<T> out(input.size());

  if (mode == Mode::Eval) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T inv = T{1} / std::sqrt(stats.running_var[ch] + eps);
      const T mu = stats.running_mean[ch];
      for (std::size_t s = 0; s < n; ++s) {
        const auto base = (s * c + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) out[base + p] = g[ch] * (x[base + p] - mu) * inv + b[ch];
      }
    }
    return detail::make_result<T>(input.shape(), std::move(out), {input, gamma, beta},
                                  [n, c, plane, eps, rv = stats.running_var,
                                   rm = stats.running_mean](detail::Node<T>& self) {
                                    auto& xin = *self.inputs[0];
                                    auto& gam = *self.inputs[1];
                                    auto& bet = *self.inputs[2];
                                    for (std::size_t ch = 0; ch < c; ++ch) {
                                      const T inv = T{1} / std::sqrt(rv[ch] + eps);
                                      T dg{0}, db{0};
                                      for (std::size_t s = 0; s < n; ++s) {
                                        const auto base = (s * c + ch) * plane;
                                        for (std::size_t p = 0; p < plane; ++p) {
                                          const T dy = self.grad[base + p];
                                          dg += dy * (xin.value[base + p] - rm[ch]) * inv;
                                          db += dy;
                                          if (xin.requires_grad) xin.grad[base + p] += dy * gam.value[ch] * inv;
                                        }
                                      }
                                      if (gam.requires_grad) gam.grad[ch] += dg;
                                      if (bet.requires_grad) bet.grad[ch] += db;
                                    }
                                  });
  }

  if (count < 2) {
    throw InvalidBatchError("batchnorm2d in train mode needs N*H*W >= 2, got " + std::to_string(count));
  }
  std::vector<T> xhat(input.size());
  std::vector<T> inv_std(c);
  const T momentum = static_cast<T>(config.momentum);
  for (std::size_t ch = 0; ch < c; ++ch) {
    T sum{0};
    for (std::size_t s = 0; s < n; ++s) {
      const auto base = (s * c + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) sum += x[base + p];
    }
    const T mu = sum / static_cast<T>(count);
    T sq{0};
    for (std::size_t s = 0; s < n; ++s) {
      const auto base = (s * c + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const T d = x[base + p] - mu;
        sq += d * d;
      }
    }
    const T var = sq / static_cast<T>(count);
    const T inv = T{1} / std::sqrt(var + eps);
    inv_std[ch] = inv;
    for (std::size_t s = 0; s < n; ++s) {
      const auto base = (s * c + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const T xh = (x[base + p] - mu) * inv;
        xhat[base + p] = xh;
        out[base + p] = g[ch] * xh + b[ch];
      }
    }
    const T unbiased = sq / static_cast<T>(count - 1);
    stats.running_mean[ch] = (T{1} - momentum) * stats.running_mean[ch] + momentum * mu;
    stats.running_var[ch] = (T{1} - momentum) * stats.running_var[ch] + momentum * unbiased;
  }

  return detail::make_result<T>(
      input.shape(), std::move(out), {input, gamma, beta},
      [n, c, plane, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node<T>& self) {
        auto& xin = *self.inputs[0];
        auto& gam = *self.inputs[1];
        auto& bet = *self.inputs[2];
        const T m = static_cast<T>(n * plane);
        for (std::size_t ch = 0; ch < c; ++ch) {
          T sum_dy{0}, sum_dy_xh{0};
          for (std::size_t s = 0; s < n; ++s) {
            const auto base = (s * c + ch) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
              sum_dy += self.grad[base + p];
              sum_dy_xh += self.grad[base + p] * xhat[base + p];
            }
          }
          if (gam.requires_grad) gam.grad[ch] += sum_dy_xh;
          if (bet.requires_grad) bet.grad[ch] += sum_dy;
          if (!xin.requires_grad) continue;
          const T k = gam.value[ch] * inv_std[ch] / m;
          for (std::size_t s = 0; s < n; ++s) {
            const auto base = (s * c + ch) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
              xin.grad[base + p] +=
                  k * (m * self.grad[base + p] - sum_dy - xhat[base + p] * sum_dy_xh);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, int kernel, int stride) {
  require_rank(input, 4, "maxpool2d input");
  if (kernel < 1 || stride < 1) throw ConfigError("maxpool2d kernel and stride must be >= 1");
  const auto n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const auto k = static_cast<std::size_t>(kernel), st = static_cast<std::size_t>(stride);
  if (k > h || k > w) {
    throw DimensionError("maxpool2d window " + std::to_string(k) + " exceeds input " + to_string(input.shape()));
  }
  const auto oh = (h - k) / st + 1, ow = (w - k) / st + 1;
  std::vector<T> out(n * c * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  const T* x = input.values().data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = x + plane * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (i * st) * w + j * st;
        for (std::size_t di = 0; di < k; ++di) {
          for (std::size_t dj = 0; dj < k; ++dj) {
            const auto idx = (i * st + di) * w + (j * st + dj);
            if (src[idx] > src[best]) best = idx;
          }
        }
        const auto o = plane * oh * ow + i * ow + j;
        out[o] = src[best];
        argmax[o] = plane * h * w + best;
      }
    }
  }
  return detail::make_result<T>({n, c, oh, ow}, std::move(out), {input},
                                [argmax = std::move(argmax)](detail::Node<T>& self) {
                                  auto& g = self.inputs[0]->grad;
                                  for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[o];
                                });
}

template <typename T>
Tensor<T> activation(const Tensor<T>& input, Activation kind) {
  const auto x = input.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = activation_value(x[i], kind);
  return detail::make_result<T>(input.shape(), std::move(out), {input}, [kind](detail::Node<T>& self) {
    auto& in = *self.inputs[0];
    for (std::size_t i = 0; i < in.value.size(); ++i) in.grad[i] += self.grad[i] * activation_grad(in.value[i], kind);
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(input, 2, "linear input");
  require_rank(weight, 2, "linear weight");
  const auto n = input.dim(0), in_f = input.dim(1), out_f = weight.dim(0);
  if (weight.dim(1) != in_f) {
    throw DimensionError("linear weight " + to_string(weight.shape()) + " does not accept input " +
                         to_string(input.shape()));
  }
  require_vector(bias, out_f, "linear bias");
  const T* x = input.values().data();
  const T* w = weight.values().data();
  const T* b = bias.values().data();
  std::vector<T> out(n * out_f);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < out_f; ++o) {
      T acc{0};
      for (std::size_t i = 0; i < in_f; ++i) acc += x[s * in_f + i] * w[o * in_f + i];
      out[s * out_f + o] = acc + b[o];
    }
  }
  return detail::make_result<T>({n, out_f}, std::move(out), {input, weight, bias},
                                [n, in_f, out_f](detail::Node<T>& self) {
                                  auto& xin = *self.inputs[0];
                                  auto& wt = *self.inputs[1];
                                  auto& bs = *self.inputs[2];
                                  for (std::size_t s = 0; s < n; ++s) {
                                    for (std::size_t o = 0; o < out_f; ++o) {
                                      const T dy = self.grad[s * out_f + o];
                                      if (bs.requires_grad) bs.grad[o] += dy;
                                      for (std::size_t i = 0; i < in_f; ++i) {
                                        if (wt.requires_grad) wt.grad[o * in_f + i] += dy * xin.value[s * in_f + i];
                                        if (xin.requires_grad) xin.grad[s * in_f + i] += dy * wt.value[o * in_f + i];
                                      }
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return detail::make_result<T>(a.shape(), std::move(out), {a, b}, [](detail::Node<T>& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  const auto av = a.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return detail::make_result<T>(a.shape(), std::move(out), {a}, [factor](detail::Node<T>& self) {
    auto& g = self.inputs[0]->grad;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 4, "concat_channels lhs");
  require_rank(b, 4, "concat_channels rhs");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw DimensionError("concat_channels mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const auto n = a.dim(0), ca = a.dim(1), cb = b.dim(1), plane = a.dim(2) * a.dim(3);
  std::vector<T> out(n * (ca + cb) * plane);
  const T* av = a.values().data();
  const T* bv = b.values().data();
  for (std::size_t s = 0; s < n; ++s) {
    T* dst = out.data() + s * (ca + cb) * plane;
    std::copy_n(av + s * ca * plane, ca * plane, dst);
    std::copy_n(bv + s * cb * plane, cb * plane, dst + ca * plane);
  }
  return detail::make_result<T>({n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {a, b},
                                [n, ca, cb, plane](detail::Node<T>& self) {
                                  auto& ga = *self.inputs[0];
                                  auto& gb = *self.inputs[1];
                                  for (std::size_t s = 0; s < n; ++s) {
                                    const T* src = self.grad.data() + s * (ca + cb) * plane;
                                    if (ga.requires_grad) {
                                      T* dst = ga.grad.data() + s * ca * plane;
                                      for (std::size_t i = 0; i < ca * plane; ++i) dst[i] += src[i];
                                    }
                                    if (gb.requires_grad) {
                                      T* dst = gb.grad.data() + s * cb * plane;
                                      for (std::size_t i = 0; i < cb * plane; ++i) dst[i] += src[ca * plane + i];
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  require_rank(input, 4, "global_avg_pool input");
  const auto n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  const T* x = input.values().data();
  std::vector<T> out(n * c);
  for (std::size_t i = 0; i < n * c; ++i) {
    T acc{0};
    for (std::size_t p = 0; p < plane; ++p) acc += x[i * plane + p];
    out[i] = acc / static_cast<T>(plane);
  }
  return detail::make_result<T>({n, c}, std::move(out), {input}, [plane](detail::Node<T>& self) {
    auto& g = self.inputs[0]->grad;
    const T inv = T{1} / static_cast<T>(plane);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      for (std::size_t p = 0; p < plane; ++p) g[i * plane + p] += self.grad[i] * inv;
    }
  });
}

template <typename T>
std::vector<T> softmax(const Tensor<T>& logits) {
  if (!logits.defined() || (logits.rank() != 2 && logits.rank() != 4)) {
    throw DimensionError("softmax expects rank 2 or 4 logits");
  }
  const auto n = logits.dim(0), k = logits.dim(1);
  const std::size_t plane = logits.rank() == 4 ? logits.dim(2) * logits.dim(3) : 1;
  const T* x = logits.values().data();
  std::vector<T> out(logits.size());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < plane; ++p) {
      const auto base = s * k * plane + p;
      T mx = x[base];
      for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, x[base + c * plane]);
      T z{0};
      for (std::size_t c = 0; c < k; ++c) {
        const T e = std::exp(x[base + c * plane] - mx);
        out[base + c * plane] = e;
        z += e;
      }
      for (std::size_t c = 0; c < k; ++c) out[base + c * plane] /= z;
    }
  }
  return out;
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets) {
  if (!logits.defined() || (logits.rank() != 2 && logits.rank() != 4)) {
    throw DimensionError("softmax_cross_entropy expects rank 2 or 4 logits");
  }
  const auto n = logits.dim(0), k = logits.dim(1);
  const std::size_t plane = logits.rank() == 4 ? logits.dim(2) * logits.dim(3) : 1;
  const auto positions = n * plane;
  if (targets.size() != positions) {
    throw DimensionError("softmax_cross_entropy got " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(positions) + " positions");
  }
  for (std::size_t i = 0; i < positions; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= k) {
      throw LabelError("target " + std::to_string(targets[i]) + " at position " + std::to_string(i) +
                       " outside [0, " + std::to_string(k) + ")");
    }
  }
  auto probs = softmax(logits);
  const T* x = logits.values().data();
  T loss{0};
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < plane; ++p) {
      const auto base = s * k * plane + p;
      T mx = x[base];
      for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, x[base + c * plane]);
      T z{0};
      for (std::size_t c = 0; c < k; ++c) z += std::exp(x[base + c * plane] - mx);
      const auto t = static_cast<std::size_t>(targets[s * plane + p]);
      loss += std::log(z) + mx - x[base + t * plane];
    }
  }
  loss /= static_cast<T>(positions);
  std::vector<std::int32_t> tcopy(targets.begin(), targets.end());
  return detail::make_result<T>(
      {1}, {loss}, {logits},
      [probs = std::move(probs), tcopy = std::move(tcopy), n, k, plane](detail::Node<T>& self) {
        auto& g = self.inputs[0]->grad;
        const T scale = self.grad[0] / static_cast<T>(n * plane);
        for (std::size_t s = 0; s < n; ++s) {
          for (std::size_t p = 0; p < plane; ++p) {
            const auto base = s * k * plane + p;
            const auto t = static_cast<std::size_t>(tcopy[s * plane + p]);
            for (std::size_t c = 0; c < k; ++c) {
              const T onehot = c == t ? T{1} : T{0};
              g[base + c * plane] += scale * (probs[base + c * plane] - onehot);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& input) {
  const auto v = input.values();
  T acc{0};
  for (auto x : v) acc += x;
  const auto count = v.size();
  return detail::make_result<T>({1}, {acc / static_cast<T>(count)}, {input}, [count](detail::Node<T>& self) {
    auto& g = self.inputs[0]->grad;
    const T d = self.grad[0] / static_cast<T>(count);
    for (auto& x : g) x += d;
  });
}

#define PYROFOCUS_INSTANTIATE(T)                                                                         \
  template T activation_value(T, Activation);                                                            \
  template Tensor<T> batchnorm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, BatchNormStats<T>&, \
                                 Mode, const BatchNormConfig&);                                          \
  template Tensor<T> maxpool2d(const Tensor<T>&, int, int);                                              \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                           \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> scale(const Tensor<T>&, T);                                                         \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                                  \
  template std::vector<T> softmax(const Tensor<T>&);                                                     \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const std::int32_t>);             \
  template Tensor<T> mean(const Tensor<T>&);

PYROFOCUS_INSTANTIATE(float)
PYROFOCUS_INSTANTIATE(double)

#undef PYROFOCUS_INSTANTIATE

}  // namespace pyrofocus::nn
