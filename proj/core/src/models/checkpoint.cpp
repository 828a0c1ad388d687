#include "pyrofocus/models/checkpoint.hpp"

#include <cstring>
#include <json.hpp>
#include <sstream>

#include "pyrofocus/data/binary_io.hpp"
#include "pyrofocus/errors.hpp"

namespace pyrofocus::models {

namespace {

constexpr const char* kMagic = "PFCK";

void write_record(data::ByteWriter& w, const NamedTensor& t) {
  w.u32(static_cast<std::uint32_t>(t.name.size()));
  w.bytes(t.name.data(), t.name.size());
  w.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
  w.array<float>(t.values);
}

NamedTensor read_record(data::ByteReader& r) {
  NamedTensor t;
  t.name = r.string(r.u32(), "record name");
  const auto rank = r.u32();
  if (rank > 8) throw FormatError("record '" + t.name + "' has implausible rank " + std::to_string(rank), r.offset());
  for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(r.u32());
  t.values = r.array<float>(nn::numel(t.shape), "record data");
  return t;
}

template <typename Model>
Checkpoint snapshot(const Model& model, const char* kind, const data::ScalerParams& scaler, const FTensor& probe,
                    const FTensor& output) {
  Checkpoint c;
  c.model = kind;
  c.spec_json = model.spec().to_json();
  c.scaler = scaler;
  c.state = model.parameters().export_state();
  c.probe_input = {"probe.input", probe.shape(), {probe.values().begin(), probe.values().end()}};
  c.probe_output = {"probe.output", output.shape(), {output.values().begin(), output.values().end()}};
  return c;
}

void verify_probe(const Checkpoint& c, const FTensor& output) {
  const auto v = output.values();
  if (output.shape() != c.probe_output.shape ||
      std::memcmp(v.data(), c.probe_output.values.data(), v.size_bytes()) != 0) {
    throw FormatError("checkpoint probe outputs do not reproduce after loading", 0);
  }
}

FTensor probe_tensor(const Checkpoint& c) { return FTensor(c.probe_input.shape, c.probe_input.values); }

}  // namespace

std::vector<std::uint8_t> Checkpoint::encode() const {
  nlohmann::ordered_json h;
  h["model"] = model;
  h["spec"] = nlohmann::ordered_json::parse(spec_json);
  h["scaler"] = nlohmann::ordered_json::parse(scaler.to_json());
  h["scaler_fingerprint"] = scaler.fingerprint();
  h["wavelengths"] = wavelengths;
  h["val_metric"] = val_metric_name;
  h["best_epoch"] = best_epoch;
  auto& hist = h["history"] = nlohmann::ordered_json::array();
  for (const auto& r : history) {
    hist.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
                    {"val_metric", r.val_metric}});
  }
  const auto header = h.dump();

  data::ByteWriter w;
  w.magic(kMagic);
  w.u32(kCheckpointVersion);
  w.u64(header.size());
  w.bytes(header.data(), header.size());
  w.u32(static_cast<std::uint32_t>(state.size() + 2));
  for (const auto& t : state) write_record(w, t);
  write_record(w, probe_input);
  write_record(w, probe_output);
  return std::move(w.buffer());
}

Checkpoint Checkpoint::decode(std::span<const std::uint8_t> bytes) {
  data::ByteReader r(bytes);
  r.expect_magic(kMagic);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), r.offset() - 4);
  }
  const auto header_offset = r.offset();
  const auto header = r.string(r.u64(), "header");
  Checkpoint c;
  try {
    const auto h = nlohmann::ordered_json::parse(header);
    c.model = h.at("model").get<std::string>();
    c.spec_json = h.at("spec").dump();
    c.scaler = data::ScalerParams::from_json(h.at("scaler").dump());
    if (h.at("scaler_fingerprint").get<std::uint64_t>() != c.scaler.fingerprint()) {
      throw FormatError("scaler fingerprint does not match the embedded scaler", header_offset);
    }
    c.wavelengths = h.at("wavelengths").get<std::vector<float>>();
    c.val_metric_name = h.at("val_metric").get<std::string>();
    c.best_epoch = h.at("best_epoch").get<int>();
    for (const auto& e : h.at("history")) {
      c.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_loss").get<double>(),
                           e.at("val_metric").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what(), header_offset);
  }
  const auto count = r.u32();
  if (count < 2) throw FormatError("checkpoint lacks probe records", r.offset());
  for (std::uint32_t i = 0; i + 2 < count; ++i) c.state.push_back(read_record(r));
  c.probe_input = read_record(r);
  c.probe_output = read_record(r);
  if (c.probe_input.name != "probe.input" || c.probe_output.name != "probe.output") {
    throw FormatError("checkpoint probe records missing", r.offset());
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const { data::write_file(path, encode()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) { return decode(data::read_file(path)); }

std::string Checkpoint::history_csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,train_loss,val_loss,val_metric\n";
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_metric << '\n';
  return out.str();
}

Checkpoint make_checkpoint(const Classifier& model, const data::ScalerParams& scaler, const FTensor& probe) {
  nn::NoGradGuard guard;
  return snapshot(model, "classifier", scaler, probe, model.forward(probe, nn::Mode::Eval));
}

Checkpoint make_checkpoint(const UNet& model, const data::ScalerParams& scaler, const FTensor& probe) {
  return snapshot(model, "unet", scaler, probe, model.infer(probe));
}

Classifier load_classifier(const Checkpoint& c) {
  if (c.model != "classifier") throw ConfigError("checkpoint holds a " + c.model + ", not a classifier");
  Classifier model(ClassifierSpec::from_json(c.spec_json));
  model.parameters().import_state(c.state);
  nn::NoGradGuard guard;
  verify_probe(c, model.forward(probe_tensor(c), nn::Mode::Eval));
  return model;
}

UNet load_unet(const Checkpoint& c) {
  if (c.model != "unet") throw ConfigError("checkpoint holds a " + c.model + ", not a U-Net");
  UNet model(UNetSpec::from_json(c.spec_json));
  model.parameters().import_state(c.state);
  verify_probe(c, model.infer(probe_tensor(c)));
  return model;
}

}  // namespace pyrofocus::models
