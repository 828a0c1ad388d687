#include "pyrofocus/models/parameters.hpp"

#include <cmath>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::models {

std::vector<float> Initializer::he_uniform(std::size_t count, std::size_t fan_in) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<float> out(count);
  for (auto& v : out) v = static_cast<float>(dist(rng_));
  return out;
}

FTensor ParameterSet::add_parameter(const std::string& name, nn::Shape shape, std::vector<float> values) {
  FTensor t(std::move(shape), std::move(values), true);
  order_.push_back({name, false, params_.size()});
  params_.push_back(t);
  return t;
}

std::shared_ptr<nn::BatchNormStats<float>> ParameterSet::add_batchnorm_stats(const std::string& name,
                                                                             std::size_t channels) {
  auto s = std::make_shared<nn::BatchNormStats<float>>(nn::BatchNormStats<float>::identity(channels));
  order_.push_back({name, true, stats_.size()});
  stats_.push_back(s);
  return s;
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::vector<NamedTensor> ParameterSet::export_state() const {
  std::vector<NamedTensor> out;
  for (const auto& e : order_) {
    if (!e.is_stats) {
      const auto& p = params_[e.index];
      out.push_back({e.name, p.shape(), {p.values().begin(), p.values().end()}});
    } else {
      const auto& s = *stats_[e.index];
      out.push_back({e.name + ".running_mean", {s.running_mean.size()}, s.running_mean});
      out.push_back({e.name + ".running_var", {s.running_var.size()}, s.running_var});
    }
  }
  return out;
}

void ParameterSet::import_state(std::span<const NamedTensor> state) {
  std::size_t k = 0;
  const auto take = [&](const std::string& name, const nn::Shape& shape) -> const NamedTensor& {
    if (k >= state.size()) throw IncompatibilityError("parameter state ends before '" + name + "'");
    const auto& t = state[k++];
    if (t.name != name || t.shape != shape || t.values.size() != nn::numel(shape)) {
      throw IncompatibilityError("parameter record '" + t.name + "' " + nn::to_string(t.shape) +
                                 " does not match expected '" + name + "' " + nn::to_string(shape));
    }
    return t;
  };
  for (const auto& e : order_) {
    if (!e.is_stats) {
      auto& p = params_[e.index];
      const auto& t = take(e.name, p.shape());
      std::copy(t.values.begin(), t.values.end(), p.mutable_values().begin());
    } else {
      auto& s = *stats_[e.index];
      const nn::Shape shape{s.running_mean.size()};
      s.running_mean = take(e.name + ".running_mean", shape).values;
      s.running_var = take(e.name + ".running_var", shape).values;
    }
  }
  if (k != state.size()) throw IncompatibilityError("unexpected extra parameter record '" + state[k].name + "'");
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Conv2d::Conv2d(ParameterSet& params, Initializer& init, const std::string& name, std::size_t in, std::size_t out,
               int kernel, int stride, int padding, bool bias)
    : stride_(stride), padding_(padding) {
  const auto k = static_cast<std::size_t>(kernel);
  weight_ = params.add_parameter(name + ".weight", {out, in, k, k}, init.he_uniform(out * in * k * k, in * k * k));
  if (bias) bias_ = params.add_parameter(name + ".bias", {out}, std::vector<float>(out, 0.0f));
}

FTensor Conv2d::operator()(const FTensor& x) const { return nn::conv2d(x, weight_, bias_, stride_, padding_); }

ConvTranspose2d::ConvTranspose2d(ParameterSet& params, Initializer& init, const std::string& name, std::size_t in,
                                 std::size_t out, int kernel, int stride)
    : stride_(stride) {
  const auto k = static_cast<std::size_t>(kernel);
  weight_ = params.add_parameter(name + ".weight", {in, out, k, k}, init.he_uniform(in * out * k * k, in));
  bias_ = params.add_parameter(name + ".bias", {out}, std::vector<float>(out, 0.0f));
}

FTensor ConvTranspose2d::operator()(const FTensor& x) const {
  return nn::conv_transpose2d(x, weight_, bias_, stride_);
}

BatchNorm2d::BatchNorm2d(ParameterSet& params, const std::string& name, std::size_t channels) {
  gamma_ = params.add_parameter(name + ".gamma", {channels}, std::vector<float>(channels, 1.0f));
  beta_ = params.add_parameter(name + ".beta", {channels}, std::vector<float>(channels, 0.0f));
  stats_ = params.add_batchnorm_stats(name, channels);
}

FTensor BatchNorm2d::operator()(const FTensor& x, nn::Mode mode) const {
  return nn::batchnorm2d(x, gamma_, beta_, *stats_, mode);
}

Linear::Linear(ParameterSet& params, Initializer& init, const std::string& name, std::size_t in, std::size_t out) {
  weight_ = params.add_parameter(name + ".weight", {out, in}, init.he_uniform(out * in, in));
  bias_ = params.add_parameter(name + ".bias", {out}, std::vector<float>(out, 0.0f));
}

FTensor Linear::operator()(const FTensor& x) const { return nn::linear(x, weight_, bias_); }

}  // namespace pyrofocus::models
