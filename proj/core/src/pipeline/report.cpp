#include "pyrofocus/pipeline/report.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::pipeline {

SweepRow sweep_row(const BenchReport& r, double prevalence) {
  return {r.pipeline, r.task, prevalence, r.patches_total, r.patches_routed, r.end_to_end_s_mean, r.speedup_percent};
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out.precision(9);
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.pipeline << ',' << to_string(r.task) << ',' << r.p << ',' << r.patches_total << ',' << r.patches_routed
        << ',' << r.t_end_to_end_s << ',' << r.speedup_pct << '\n';
  }
  return out.str();
}

std::string bench_reports_json(std::span<const BenchReport> reports, const CostModelFit* fit) {
  nlohmann::ordered_json j;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(nlohmann::ordered_json::parse(r.to_json()));
  if (fit) {
    j["cost_model"] = {{"t_cls_s", fit->t_cls_s},           {"t_unet_s", fit->t_unet_s},
                       {"overhead_s", fit->overhead_s},     {"predicted_s", fit->predicted_s},
                       {"measured_s", fit->measured_s},     {"relative_error", fit->relative_error},
                       {"unet_to_cls_ratio", fit->unet_to_cls_ratio}};
  }
  return j.dump(2);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw UsageError("failed writing " + path.string());
}

}  // namespace pyrofocus::pipeline
