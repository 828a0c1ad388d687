#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pyrofocus/pipeline/benchmark.hpp"

namespace pyrofocus::pipeline {

struct SweepRow {
  std::string pipeline;
  Task task = Task::Segmentation;
  double p = 0.0;  // fire prevalence of the dataset
  std::size_t patches_total = 0;
  std::size_t patches_routed = 0;
  double t_end_to_end_s = 0.0;
  double speedup_pct = 0.0;
};

inline constexpr const char* kSweepCsvHeader =
    "pipeline,task,p,patches_total,patches_routed,t_end_to_end_s,speedup_pct";

SweepRow sweep_row(const BenchReport& report, double prevalence);
std::string sweep_csv(std::span<const SweepRow> rows);

/// {"reports": [...], "cost_model": {...}} for a single/cascade pair.
std::string bench_reports_json(std::span<const BenchReport> reports, const CostModelFit* fit = nullptr);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pyrofocus::pipeline
