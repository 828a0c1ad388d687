#include "pyrofocus/models/unet.hpp"

#include <algorithm>
#include <json.hpp>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::models {

const char* to_string(UNetHead head) { return head == UNetHead::Segmentation ? "segmentation" : "frp"; }

UNetHead unet_head_from_string(const std::string& name) {
  if (name == "segmentation" || name == "seg") return UNetHead::Segmentation;
  if (name == "frp") return UNetHead::Frp;
  throw ConfigError("unknown U-Net head '" + name + "' (expected segmentation or frp)");
}

void UNetSpec::validate() const {
  if (depth < 1 || depth > 3) throw ConfigError("U-Net depth must be in [1,3], got " + std::to_string(depth));
  if (base_width < 1) throw ConfigError("U-Net base_width must be positive");
  if (in_channels < 1) throw ConfigError("U-Net needs at least one input channel");
}

std::string UNetSpec::to_json() const {
  nlohmann::ordered_json j;
  j["in_channels"] = in_channels;
  j["head"] = to_string(head);
  j["depth"] = depth;
  j["base_width"] = base_width;
  j["deep_supervision"] = deep_supervision;
  return j.dump();
}

UNetSpec UNetSpec::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    UNetSpec s;
    s.in_channels = j.at("in_channels").get<std::size_t>();
    s.head = unet_head_from_string(j.at("head").get<std::string>());
    s.depth = j.at("depth").get<int>();
    s.base_width = j.at("base_width").get<std::size_t>();
    s.deep_supervision = j.at("deep_supervision").get<bool>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed U-Net spec: ") + e.what());
  }
}

namespace {

struct ResidualBlock {
  Conv2d conv1, conv2, proj;
  BatchNorm2d bn1, bn2, proj_bn;
  bool has_proj = false;

  ResidualBlock(ParameterSet& p, Initializer& init, const std::string& name, std::size_t in, std::size_t out)
      : conv1(p, init, name + ".conv1", in, out, 3, 1, 1, false),
        conv2(p, init, name + ".conv2", out, out, 3, 1, 1, false),
        bn1(p, name + ".bn1", out),
        bn2(p, name + ".bn2", out) {
    if (in != out) {
      has_proj = true;
      proj = Conv2d(p, init, name + ".proj", in, out, 1, 1, 0, false);
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

struct UNet::Impl {
  std::vector<ResidualBlock> encoder;  // depth + 1 blocks, the last is the bottleneck
  std::vector<ConvTranspose2d> up;     // depth, coarse to fine
  std::vector<ResidualBlock> decoder;  // depth, coarse to fine
  std::vector<Conv2d> aux_heads;       // depth - 1, coarse to fine
  Conv2d head;
};

UNet::UNet(UNetSpec spec, std::uint64_t seed) : spec_(spec), impl_(std::make_unique<Impl>()) {
  spec_.validate();
  Initializer init(seed);
  auto& p = params_;
  const auto d = static_cast<std::size_t>(spec_.depth);
  const auto width = [&](std::size_t level) { return spec_.base_width << level; };
  std::size_t in = spec_.in_channels;
  for (std::size_t l = 0; l <= d; ++l) {
    impl_->encoder.emplace_back(p, init, (l < d ? "enc" + std::to_string(l) : std::string("bottleneck")), in,
                                width(l));
    in = width(l);
  }
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t level = d - 1 - k;
    const auto name = "dec" + std::to_string(level);
    impl_->up.emplace_back(p, init, name + ".up", width(level + 1), width(level), 2, 2);
    impl_->decoder.emplace_back(p, init, name + ".block", 2 * width(level), width(level));
    if (spec_.deep_supervision && level > 0) {
      impl_->aux_heads.emplace_back(p, init, name + ".aux_head", width(level), spec_.out_channels(), 1, 1, 0, true);
    }
  }
  impl_->head = Conv2d(p, init, "head", width(0), spec_.out_channels(), 1, 1, 0, true);
}

UNet::~UNet() = default;
UNet::UNet(UNet&&) noexcept = default;
UNet& UNet::operator=(UNet&&) noexcept = default;

UNetOutput UNet::forward(const FTensor& x, nn::Mode mode) const {
  const std::size_t factor = std::size_t{1} << spec_.depth;
  if (x.rank() != 4 || x.dim(1) != spec_.in_channels || x.dim(2) % factor != 0 || x.dim(3) % factor != 0 ||
      x.dim(2) == 0 || x.dim(3) == 0) {
    throw DimensionError("U-Net expects [N," + std::to_string(spec_.in_channels) + ",H,W] with H and W divisible by " +
                         std::to_string(factor) + ", got " + nn::to_string(x.shape()));
  }
  const auto d = static_cast<std::size_t>(spec_.depth);
  std::vector<FTensor> skips;
  FTensor h = x;
  for (std::size_t l = 0; l < d; ++l) {
    h = impl_->encoder[l](h, mode);
    skips.push_back(h);
    h = nn::maxpool2d(h, 2, 2);
  }
  h = impl_->encoder[d](h, mode);

  UNetOutput out;
  std::size_t aux_index = 0;
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t level = d - 1 - k;
    h = impl_->up[k](h);
    h = impl_->decoder[k](nn::concat_channels(h, skips[level]), mode);
    if (spec_.deep_supervision && level > 0) out.aux.push_back(impl_->aux_heads[aux_index++](h));
  }
  std::reverse(out.aux.begin(), out.aux.end());
  out.main = impl_->head(h);
  return out;
}

FTensor UNet::infer(const FTensor& x) const {
  nn::NoGradGuard guard;
  auto raw = forward(x, nn::Mode::Eval).main;
  if (spec_.head == UNetHead::Segmentation) {
    return FTensor(raw.shape(), nn::softmax(raw));
  }
  std::vector<float> v(raw.values().begin(), raw.values().end());
  for (auto& e : v) e = std::max(e, 0.0f);
  return FTensor(raw.shape(), std::move(v));
}

}  // namespace pyrofocus::models
