#pragma once

// Checkpoint file layout (little-endian):
//   "PFCK" | u32 version | u64 header length | header JSON
//   | u32 record count | records
// Each record: u32 name length | name | u32 rank | rank x u32 dims | f32 data.
// The header holds the model kind and spec, the scaler, its fingerprint, the
// band wavelengths and the training history. Records are the model state in
// registration order followed by "probe.input" and "probe.output"; loading a
// model reruns the probe and requires bit-identical outputs.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pyrofocus/data/scaler.hpp"
#include "pyrofocus/models/classifier.hpp"
#include "pyrofocus/models/parameters.hpp"
#include "pyrofocus/models/unet.hpp"

namespace pyrofocus::models {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct HistoryRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;

  bool operator==(const HistoryRecord&) const = default;
};

struct Checkpoint {
  std::string model;      // "classifier" or "unet"
  std::string spec_json;  // ClassifierSpec or UNetSpec JSON
  data::ScalerParams scaler;
  std::vector<float> wavelengths;  // band set of the training data; empty when unknown
  std::string val_metric_name;
  int best_epoch = 0;
  std::vector<HistoryRecord> history;
  std::vector<NamedTensor> state;
  NamedTensor probe_input;
  NamedTensor probe_output;

  std::uint64_t scaler_fingerprint() const { return scaler.fingerprint(); }

  std::vector<std::uint8_t> encode() const;
  /// Throws FormatError for a bad magic, unknown version or truncation.
  static Checkpoint decode(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  /// History as CSV: epoch,train_loss,val_loss,val_metric.
  std::string history_csv() const;
};

/// Snapshots a model with its probe. `probe` is an [N,C,24,64] batch; the
/// stored outputs are eval-mode logits (classifier) or infer() results (U-Net).
Checkpoint make_checkpoint(const Classifier& model, const data::ScalerParams& scaler, const FTensor& probe);
Checkpoint make_checkpoint(const UNet& model, const data::ScalerParams& scaler, const FTensor& probe);

/// Rebuilds the model and verifies the probe. Throws ConfigError when the
/// checkpoint holds the other model kind and FormatError when the probe
/// outputs differ.
Classifier load_classifier(const Checkpoint& checkpoint);
UNet load_unet(const Checkpoint& checkpoint);

}  // namespace pyrofocus::models
