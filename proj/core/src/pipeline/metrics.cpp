#include "pyrofocus/pipeline/metrics.hpp"

#include <cmath>
#include <json.hpp>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::pipeline {

namespace {

void check_codes(std::span<const std::uint8_t> v, std::size_t classes, const char* what) {
  for (auto c : v) {
    if (c >= classes) throw LabelError(std::string(what) + " code " + std::to_string(c) + " outside [0," +
                                       std::to_string(classes) + ")");
  }
}

void fill_summary(EvalMetrics& m) {
  const auto& cm = m.confusion;
  m.accuracy = cm.accuracy();
  m.precision.clear();
  m.recall.clear();
  m.f1.clear();
  for (std::size_t c = 0; c < cm.classes; ++c) {
    m.precision.push_back(cm.precision(c));
    m.recall.push_back(cm.recall(c));
    m.f1.push_back(cm.f1(c));
  }
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

double ConfusionMatrix::accuracy() const {
  const auto t = total();
  if (t == 0) return 0.0;
  std::uint64_t diag = 0;
  for (std::size_t c = 0; c < classes; ++c) diag += count(c, c);
  return static_cast<double>(diag) / static_cast<double>(t);
}

double ConfusionMatrix::precision(std::size_t c) const {
  std::uint64_t col = 0;
  for (std::size_t l = 0; l < classes; ++l) col += count(l, c);
  return col ? static_cast<double>(count(c, c)) / static_cast<double>(col) : 0.0;
}

double ConfusionMatrix::recall(std::size_t c) const {
  std::uint64_t row = 0;
  for (std::size_t p = 0; p < classes; ++p) row += count(c, p);
  return row ? static_cast<double>(count(c, c)) / static_cast<double>(row) : 0.0;
}

double ConfusionMatrix::f1(std::size_t c) const {
  const double p = precision(c), r = recall(c);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

ConfusionMatrix confusion_matrix(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels,
                                 std::size_t classes) {
  if (preds.size() != labels.size()) {
    throw DataError("confusion_matrix: " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(labels.size()) + " labels");
  }
  check_codes(preds, classes, "prediction");
  check_codes(labels, classes, "label");
  ConfusionMatrix m;
  m.classes = classes;
  m.counts.assign(classes * classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) ++m.counts[labels[i] * classes + preds[i]];
  m.normalized.assign(classes * classes, 0.0);
  m.zero_support.assign(classes, false);
  for (std::size_t l = 0; l < classes; ++l) {
    std::uint64_t row = 0;
    for (std::size_t p = 0; p < classes; ++p) row += m.count(l, p);
    m.zero_support[l] = row == 0;
    if (row == 0) continue;
    for (std::size_t p = 0; p < classes; ++p) {
      m.normalized[l * classes + p] = static_cast<double>(m.count(l, p)) / static_cast<double>(row);
    }
  }
  return m;
}

double miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, std::size_t classes) {
  if (pred.empty() || truth.empty()) throw DataError("miou: empty mask");
  if (pred.size() != truth.size()) throw DataError("miou: mask sizes differ");
  check_codes(pred, classes, "prediction");
  check_codes(truth, classes, "label");
  std::vector<std::uint64_t> inter(classes, 0), uni(classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) {
      ++inter[pred[i]];
      ++uni[pred[i]];
    } else {
      ++uni[pred[i]];
      ++uni[truth[i]];
    }
  }
  double sum = 0.0;
  std::size_t supported = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (uni[c] == 0) continue;
    sum += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    ++supported;
  }
  return sum / static_cast<double>(supported);
}

MaskedMae masked_mae(std::span<const float> pred, std::span<const float> truth, std::span<const std::uint8_t> mask) {
  if (pred.size() != truth.size() || pred.size() != mask.size()) throw DataError("masked_mae: size mismatch");
  MaskedMae out;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    sum += std::abs(static_cast<double>(pred[i]) - static_cast<double>(truth[i]));
    ++out.pixels;
  }
  out.empty_mask = out.pixels == 0;
  out.value = out.pixels ? sum / static_cast<double>(out.pixels) : 0.0;
  return out;
}

EvalMetrics classification_metrics(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels) {
  EvalMetrics m;
  m.confusion = confusion_matrix(preds, labels);
  fill_summary(m);
  return m;
}

EvalMetrics segmentation_metrics(std::span<const std::uint8_t> pred_mask, std::span<const std::uint8_t> true_mask) {
  EvalMetrics m;
  m.has_segmentation = true;
  m.confusion = confusion_matrix(pred_mask, true_mask);
  fill_summary(m);
  m.miou = miou(pred_mask, true_mask);
  std::uint64_t nofire = 0, fp = 0;
  for (std::size_t i = 0; i < true_mask.size(); ++i) {
    if (true_mask[i] != 0) continue;
    ++nofire;
    if (pred_mask[i] != 0) ++fp;
  }
  m.false_positive_rate = nofire ? static_cast<double>(fp) / static_cast<double>(nofire) : 0.0;
  return m;
}

EvalMetrics frp_metrics(std::span<const float> pred, std::span<const float> truth,
                        std::span<const std::uint8_t> true_mask) {
  if (true_mask.size() != pred.size()) throw DataError("frp_metrics: size mismatch");
  EvalMetrics m;
  m.has_frp = true;
  std::vector<std::uint8_t> fire(true_mask.size());
  std::uint64_t nofire = 0, fp = 0;
  for (std::size_t i = 0; i < true_mask.size(); ++i) {
    fire[i] = true_mask[i] != 0 ? 1 : 0;
    if (fire[i]) continue;
    ++nofire;
    if (pred[i] > 0.0f) ++fp;
  }
  m.mae = masked_mae(pred, truth, fire);
  m.false_positive_rate = nofire ? static_cast<double>(fp) / static_cast<double>(nofire) : 0.0;
  return m;
}

std::string EvalMetrics::to_json() const {
  nlohmann::ordered_json j;
  if (!confusion.counts.empty()) {
    auto& c = j["confusion"];
    const auto k = confusion.classes;
    for (std::size_t l = 0; l < k; ++l) {
      c["counts"].push_back(std::vector<std::uint64_t>(confusion.counts.begin() + l * k,
                                                       confusion.counts.begin() + (l + 1) * k));
      c["normalized"].push_back(std::vector<double>(confusion.normalized.begin() + l * k,
                                                    confusion.normalized.begin() + (l + 1) * k));
    }
    c["zero_support_rows"] = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < k; ++l) {
      if (confusion.zero_support[l]) c["zero_support_rows"].push_back(l);
    }
    j["accuracy"] = accuracy;
    j["precision"] = precision;
    j["recall"] = recall;
    j["f1"] = f1;
  }
  if (has_segmentation) j["miou"] = miou;
  if (has_frp) {
    j["masked_mae"] = mae.value;
    j["masked_mae_pixels"] = mae.pixels;
    j["masked_mae_empty_mask"] = mae.empty_mask;
  }
  if (has_segmentation || has_frp) j["false_positive_rate"] = false_positive_rate;
  return j.dump(2);
}

}  // namespace pyrofocus::pipeline
