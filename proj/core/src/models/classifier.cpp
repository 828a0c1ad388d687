#include "pyrofocus/models/classifier.hpp"

#include <json.hpp>

#include "pyrofocus/data/patch.hpp"
#include "pyrofocus/errors.hpp"

namespace pyrofocus::models {

void ClassifierSpec::validate() const {
  if (arch != "simple_cnn" && arch != "resnet_lite") {
    throw ConfigError("unsupported classifier arch '" + arch + "' (expected simple_cnn or resnet_lite)");
  }
  if (in_channels < 1) throw ConfigError("classifier needs at least one input channel");
  if (num_classes != 4) throw ConfigError("classifier num_classes must be 4");
}

std::string ClassifierSpec::to_json() const {
  nlohmann::ordered_json j;
  j["arch"] = arch;
  j["in_channels"] = in_channels;
  j["num_classes"] = num_classes;
  return j.dump();
}

ClassifierSpec ClassifierSpec::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ClassifierSpec s;
    s.arch = j.at("arch").get<std::string>();
    s.in_channels = j.at("in_channels").get<std::size_t>();
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed classifier spec: ") + e.what());
  }
}

namespace {

struct ConvBnRelu {
  Conv2d conv;
  BatchNorm2d bn;
  FTensor operator()(const FTensor& x, nn::Mode mode) const {
    return nn::activation(bn(conv(x), mode), nn::Activation::ReLU);
  }
};

struct BasicBlock {
  Conv2d conv1, conv2, proj;
  BatchNorm2d bn1, bn2, proj_bn;
  bool has_proj = false;

  BasicBlock(ParameterSet& p, Initializer& init, const std::string& name, std::size_t in, std::size_t out,
             int stride)
      : conv1(p, init, name + ".conv1", in, out, 3, stride, 1, false),
        conv2(p, init, name + ".conv2", out, out, 3, 1, 1, false),
        bn1(p, name + ".bn1", out),
        bn2(p, name + ".bn2", out) {
    if (stride != 1 || in != out) {
      has_proj = true;
      proj = Conv2d(p, init, name + ".proj", in, out, 1, stride, 0, false);
      proj_bn = BatchNorm2d(p, name + ".proj_bn", out);
    }
  }

  FTensor operator()(const FTensor& x, nn::Mode mode) const {
    auto h = nn::activation(bn1(conv1(x), mode), nn::Activation::ReLU);
    h = bn2(conv2(h), mode);
    const auto skip = has_proj ? proj_bn(proj(x), mode) : x;
    return nn::activation(nn::add(h, skip), nn::Activation::ReLU);
  }
};

}  // namespace

struct Classifier::Impl {
  // simple_cnn
  std::vector<ConvBnRelu> blocks;
  Linear hidden;
  // resnet_lite
  ConvBnRelu stem;
  std::vector<BasicBlock> stages;
  Linear head;
};

Classifier::Classifier(ClassifierSpec spec, std::uint64_t seed) : spec_(std::move(spec)), impl_(std::make_unique<Impl>()) {
  spec_.validate();
  Initializer init(seed);
  auto& p = params_;
  if (spec_.arch == "simple_cnn") {
    std::size_t in = spec_.in_channels;
    const std::size_t widths[3] = {32, 64, 128};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto name = "block" + std::to_string(i + 1);
      impl_->blocks.push_back({Conv2d(p, init, name + ".conv", in, widths[i], 3, 1, 1, false),
                               BatchNorm2d(p, name + ".bn", widths[i])});
      in = widths[i];
    }
    impl_->hidden = Linear(p, init, "fc1", 128, 128);
    impl_->head = Linear(p, init, "fc2", 128, spec_.num_classes);
  } else {
    impl_->stem = {Conv2d(p, init, "stem.conv", spec_.in_channels, 32, 3, 1, 1, false), BatchNorm2d(p, "stem.bn", 32)};
    std::size_t in = 32;
    const std::size_t widths[4] = {32, 64, 128, 256};
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t b = 0; b < 2; ++b) {
        const int stride = (s > 0 && b == 0) ? 2 : 1;
        impl_->stages.emplace_back(p, init, "stage" + std::to_string(s + 1) + "." + std::to_string(b), in, widths[s],
                                   stride);
        in = widths[s];
      }
    }
    impl_->head = Linear(p, init, "fc", 256, spec_.num_classes);
  }
}

Classifier::~Classifier() = default;
Classifier::Classifier(Classifier&&) noexcept = default;
Classifier& Classifier::operator=(Classifier&&) noexcept = default;

FTensor Classifier::forward(const FTensor& x, nn::Mode mode) const {
  if (x.rank() != 4 || x.dim(1) != spec_.in_channels || x.dim(2) != data::kPatchHeight ||
      x.dim(3) != data::kPatchWidth) {
    throw DimensionError("classifier expects [N," + std::to_string(spec_.in_channels) + ",24,64], got " +
                         nn::to_string(x.shape()));
  }
  FTensor h = x;
  if (spec_.arch == "simple_cnn") {
    for (const auto& b : impl_->blocks) h = nn::maxpool2d(b(h, mode), 2, 2);
    h = nn::global_avg_pool(h);
    h = nn::activation(impl_->hidden(h), nn::Activation::ReLU);
    return impl_->head(h);
  }
  h = impl_->stem(h, mode);
  for (const auto& b : impl_->stages) h = b(h, mode);
  return impl_->head(nn::global_avg_pool(h));
}

}  // namespace pyrofocus::models
