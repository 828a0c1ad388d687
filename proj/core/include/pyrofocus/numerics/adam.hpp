#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pyrofocus/numerics/tensor.hpp"

namespace pyrofocus::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::size_t step_count = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;

  /// Zeroed moments shaped like `params`.
  static AdamState initialize(std::span<const Tensor<T>> params, AdamConfig config = {});
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// A parameter without a grad is treated as having a zero gradient.
/// Throws DimensionError when the moment stores do not match `params`.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state);

extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace pyrofocus::nn
