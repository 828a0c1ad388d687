#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pyrofocus/numerics/ops.hpp"
#include "pyrofocus/numerics/tensor.hpp"

namespace pyrofocus::models {

using FTensor = nn::Tensor<float>;

struct NamedTensor {
  std::string name;
  nn::Shape shape;
  std::vector<float> values;

  bool operator==(const NamedTensor&) const = default;
};

/// Seeded weight initialization.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}
  /// He-uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
  std::vector<float> he_uniform(std::size_t count, std::size_t fan_in);

 private:
  std::mt19937_64 rng_;
};

/// Named trainable tensors plus batchnorm running statistics, in
/// registration order. Layers hold handles onto the same storage.
class ParameterSet {
 public:
  FTensor add_parameter(const std::string& name, nn::Shape shape, std::vector<float> values);
  std::shared_ptr<nn::BatchNormStats<float>> add_batchnorm_stats(const std::string& name, std::size_t channels);

  std::vector<FTensor>& trainable() { return params_; }
  const std::vector<FTensor>& trainable() const { return params_; }
  /// Number of trainable scalars.
  std::size_t parameter_count() const;

  /// Deep copy of every tensor and buffer (buffers as "<name>.running_mean"/".running_var").
  std::vector<NamedTensor> export_state() const;
  /// Overwrites values from `state`. Throws IncompatibilityError when names, order or
  /// shapes differ from this set.
  void import_state(std::span<const NamedTensor> state);

  void zero_grad();

 private:
  struct Entry {
    std::string name;
    bool is_stats;
    std::size_t index;
  };
  std::vector<Entry> order_;
  std::vector<FTensor> params_;
  std::vector<std::shared_ptr<nn::BatchNormStats<float>>> stats_;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterSet& params, Initializer& init, const std::string& name, std::size_t in, std::size_t out,
         int kernel, int stride, int padding, bool bias);
  FTensor operator()(const FTensor& x) const;

 private:
  FTensor weight_, bias_;
  int stride_ = 1, padding_ = 0;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(ParameterSet& params, Initializer& init, const std::string& name, std::size_t in,
                  std::size_t out, int kernel, int stride);
  FTensor operator()(const FTensor& x) const;

 private:
  FTensor weight_, bias_;
  int stride_ = 1;
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(ParameterSet& params, const std::string& name, std::size_t channels);
  FTensor operator()(const FTensor& x, nn::Mode mode) const;

 private:
  FTensor gamma_, beta_;
  std::shared_ptr<nn::BatchNormStats<float>> stats_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, Initializer& init, const std::string& name, std::size_t in, std::size_t out);
  FTensor operator()(const FTensor& x) const;

 private:
  FTensor weight_, bias_;
};

}  // namespace pyrofocus::models
