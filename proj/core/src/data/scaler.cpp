#include "pyrofocus/data/scaler.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "pyrofocus/data/binary_io.hpp"
#include "pyrofocus/errors.hpp"

namespace pyrofocus::data {

std::string ScalerParams::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["band_min"] = band_min;
  j["band_max"] = band_max;
  j["degenerate"] = degenerate;
  j["frp_min"] = frp_min;
  j["frp_max"] = frp_max;
  j["frp_degenerate"] = frp_degenerate;
  return j.dump(2);
}

ScalerParams ScalerParams::from_json(const std::string& text) {
  ScalerParams p;
  try {
    const auto j = nlohmann::json::parse(text);
    p.method = j.at("method").get<std::string>();
    p.band_min = j.at("band_min").get<std::vector<float>>();
    p.band_max = j.at("band_max").get<std::vector<float>>();
    p.degenerate = j.at("degenerate").get<std::vector<bool>>();
    p.frp_min = j.at("frp_min").get<float>();
    p.frp_max = j.at("frp_max").get<float>();
    p.frp_degenerate = j.at("frp_degenerate").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scaler JSON: ") + e.what());
  }
  if (p.method != "minmax") throw ConfigError("unsupported scaler method '" + p.method + "'");
  if (p.band_max.size() != p.band_min.size() || p.degenerate.size() != p.band_min.size()) {
    throw DataError("scaler arrays disagree in length");
  }
  return p;
}

void ScalerParams::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << to_json() << '\n';
}

ScalerParams ScalerParams::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("scaler not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::uint64_t ScalerParams::fingerprint() const {
  const auto text = to_json();
  return fnv1a({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

ScalerParams fit_minmax(const Partition& train) {
  if (train.kind() != SplitKind::Train) {
    throw UsageError(std::string("scaler must be fit on the training split, got ") + to_string(train.kind()));
  }
  if (train.empty()) throw DataError("cannot fit a scaler on an empty training split");
  const auto channels = train.patches().front().channels;
  ScalerParams p;
  p.band_min.assign(channels, std::numeric_limits<float>::infinity());
  p.band_max.assign(channels, -std::numeric_limits<float>::infinity());
  p.frp_min = std::numeric_limits<float>::infinity();
  p.frp_max = -std::numeric_limits<float>::infinity();
  for (const auto& patch : train.patches()) {
    if (patch.channels != channels) throw DimensionError("training patches disagree in band count");
    const auto plane = patch.plane_size();
    for (std::size_t c = 0; c < channels; ++c) {
      const auto [lo, hi] = std::minmax_element(patch.data.begin() + c * plane, patch.data.begin() + (c + 1) * plane);
      p.band_min[c] = std::min(p.band_min[c], *lo);
      p.band_max[c] = std::max(p.band_max[c], *hi);
    }
    for (auto v : patch.frp) {
      p.frp_min = std::min(p.frp_min, v);
      p.frp_max = std::max(p.frp_max, v);
    }
  }
  p.degenerate.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) p.degenerate[c] = !(p.band_max[c] > p.band_min[c]);
  p.frp_degenerate = !(p.frp_max > p.frp_min);
  return p;
}

template <typename T>
void apply_scaler(const ScalerParams& params, std::span<T> planes, std::size_t plane_size) {
  if (plane_size == 0 || planes.size() != params.channels() * plane_size) {
    throw DimensionError("scaler expects " + std::to_string(params.channels()) + " bands of " +
                         std::to_string(plane_size) + " values, got " + std::to_string(planes.size()) + " values");
  }
  for (std::size_t c = 0; c < params.channels(); ++c) {
    auto band = planes.subspan(c * plane_size, plane_size);
    if (params.degenerate[c]) {
      std::fill(band.begin(), band.end(), T{0});
      continue;
    }
    const double lo = params.band_min[c];
    const double range = static_cast<double>(params.band_max[c]) - lo;
    for (auto& v : band) v = static_cast<T>((static_cast<double>(v) - lo) / range);
  }
}

template <typename T>
void invert_scaler(const ScalerParams& params, std::span<T> planes, std::size_t plane_size) {
  if (plane_size == 0 || planes.size() != params.channels() * plane_size) {
    throw DimensionError("scaler expects " + std::to_string(params.channels()) + " bands of " +
                         std::to_string(plane_size) + " values, got " + std::to_string(planes.size()) + " values");
  }
  for (std::size_t c = 0; c < params.channels(); ++c) {
    auto band = planes.subspan(c * plane_size, plane_size);
    const double lo = params.band_min[c];
    if (params.degenerate[c]) {
      std::fill(band.begin(), band.end(), static_cast<T>(lo));
      continue;
    }
    const double range = static_cast<double>(params.band_max[c]) - lo;
    for (auto& v : band) v = static_cast<T>(static_cast<double>(v) * range + lo);
  }
}

template void apply_scaler(const ScalerParams&, std::span<float>, std::size_t);
template void apply_scaler(const ScalerParams&, std::span<double>, std::size_t);
template void invert_scaler(const ScalerParams&, std::span<float>, std::size_t);
template void invert_scaler(const ScalerParams&, std::span<double>, std::size_t);

float scale_frp(const ScalerParams& params, float frp_mw) {
  if (params.frp_degenerate) return 0.0f;
  return static_cast<float>((static_cast<double>(frp_mw) - params.frp_min) /
                            (static_cast<double>(params.frp_max) - params.frp_min));
}

float unscale_frp(const ScalerParams& params, float normalized) {
  if (params.frp_degenerate) return params.frp_min;
  return static_cast<float>(static_cast<double>(normalized) * (static_cast<double>(params.frp_max) - params.frp_min) +
                            params.frp_min);
}

void apply_scaler(const ScalerParams& params, Patch& patch) {
  apply_scaler<float>(params, patch.data, patch.plane_size());
  for (auto& v : patch.frp) v = scale_frp(params, v);
}

void apply_scaler(const ScalerParams& params, Partition& partition) {
  for (auto& p : partition.patches()) apply_scaler(params, p);
}

}  // namespace pyrofocus::data
