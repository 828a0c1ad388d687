#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "pyrofocus/models/parameters.hpp"

namespace pyrofocus::models {

/// Patch classifier description. `arch` is "simple_cnn" or "resnet_lite".
struct ClassifierSpec {
  std::string arch = "simple_cnn";
  std::size_t in_channels = 9;
  std::size_t num_classes = 4;

  /// Throws ConfigError for an unknown arch, zero channels or num_classes != 4.
  void validate() const;
  std::string to_json() const;
  static ClassifierSpec from_json(const std::string& text);
  bool operator==(const ClassifierSpec&) const = default;
};

/// Maps [N, C, 24, 64] patches to [N, 4] logits.
///
/// simple_cnn: three conv3x3(pad 1) -> BN -> ReLU -> maxpool2 blocks
/// (32/64/128), global average pool, linear 128 + ReLU, linear 4.
/// resnet_lite: conv3x3 stem (32) -> BN -> ReLU, four stages of two basic
/// blocks (32/64/128/256, stride 2 at the first block of stages 2-4, 1x1
/// projection shortcuts), global average pool, linear 4.
/// All convolutions pad by 1, so 24x64 maps to 3x8 at the last stage.
class Classifier {
 public:
  explicit Classifier(ClassifierSpec spec, std::uint64_t seed = 0);
  ~Classifier();
  Classifier(Classifier&&) noexcept;
  Classifier& operator=(Classifier&&) noexcept;

  /// Throws DimensionError unless x is [N, in_channels, 24, 64].
  FTensor forward(const FTensor& x, nn::Mode mode) const;

  const ClassifierSpec& spec() const { return spec_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.parameter_count(); }

 private:
  struct Impl;
  ClassifierSpec spec_;
  ParameterSet params_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pyrofocus::models
