#pragma once

// Differentiable primitives. All ops are instantiated for float (training and
// inference) and double (gradient checks). Summation orders are fixed, so
// identical inputs give bit-identical outputs.

#include <cstdint>
#include <span>
#include <vector>

#include "pyrofocus/numerics/tensor.hpp"

namespace pyrofocus::nn {

enum class Mode { Train, Eval };

enum class Activation { ReLU, LeakyReLU, GELU, HSwish };

inline constexpr double kLeakySlope = 0.01;

/// Cross-correlation of [N,Cin,H,W] with [Cout,Cin,kh,kw], zero padding.
/// `bias` may be undefined; otherwise shape [Cout].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, int stride,
                 int padding);

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, int stride, int padding) {
  return conv2d(input, kernel, Tensor<T>{}, stride, padding);
}

/// Adjoint of conv2d (no padding). Kernel layout [Cin,Cout,kh,kw], so the same
/// kernel array used by conv2d with Cout->Cin gives the exact adjoint.
/// Output spatial size is (H-1)*stride + kh.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                           int stride);

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, int stride) {
  return conv_transpose2d(input, kernel, Tensor<T>{}, stride);
}

struct BatchNormConfig {
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel running statistics, updated in place by train-mode calls.
template <typename T>
struct BatchNormStats {
  std::vector<T> running_mean;
  std::vector<T> running_var;

  static BatchNormStats identity(std::size_t channels) {
    return {std::vector<T>(channels, T{0}), std::vector<T>(channels, T{1})};
  }
};

/// Train mode normalizes with biased batch statistics and folds the unbiased
/// batch variance into the running estimate. Eval mode is a per-channel affine
/// map. Throws InvalidBatchError in train mode when N*H*W < 2.
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormStats<T>& stats, Mode mode, const BatchNormConfig& config = {});

/// Window maximum. Backward routes each output gradient to the first maximal
/// element of its window in row-major order.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, int kernel, int stride);

/// Elementwise. GELU uses the tanh approximation; leaky slope is kLeakySlope.
template <typename T>
Tensor<T> activation(const Tensor<T>& input, Activation kind);

template <typename T>
T activation_value(T x, Activation kind);

/// [N,in] x [out,in]^T + [out].
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// Concatenates two [N,C,H,W] tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// [N,C,H,W] -> [N,C].
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

/// Mean negative log-likelihood. Logits are [N,K] or [N,K,H,W] (class axis 1);
/// targets hold one class index per sample/pixel in (n, h, w) order.
/// Throws LabelError for out-of-range targets.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets);

/// Softmax along axis 1 of a rank-2 or rank-4 tensor; not differentiable.
template <typename T>
std::vector<T> softmax(const Tensor<T>& logits);

/// Mean of all elements as a scalar tensor.
template <typename T>
Tensor<T> mean(const Tensor<T>& input);

}  // namespace pyrofocus::nn
