#include "pyrofocus/numerics/adam.hpp"

#include <cmath>
#include <string>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::nn {

template <typename T>
AdamState<T> AdamState<T>::initialize(std::span<const Tensor<T>> params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.size(), T{0});
    state.second_moment.emplace_back(p.size(), T{0});
  }
  return state;
}

template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw DimensionError("adam state tracks " + std::to_string(state.first_moment.size()) +
                         " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size() || state.second_moment[i].size() != params[i].size()) {
      throw DimensionError("adam moment store " + std::to_string(i) + " does not match parameter shape " +
                           to_string(params[i].shape()));
    }
  }
  ++state.step_count;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step_count);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_values();
    const auto grad = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const T g = grad.empty() ? T{0} : grad[j];
      m[j] = b1 * m[j] + (T{1} - b1) * g;
      v[j] = b2 * v[j] + (T{1} - b2) * g * g;
      const T mhat = m[j] / correction1;
      const T vhat = v[j] / correction2;
      values[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::span<Tensor<float>>, AdamState<float>&);
template void adam_step(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace pyrofocus::nn
