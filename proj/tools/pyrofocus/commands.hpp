#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pyrofocus::cli {

namespace fs = std::filesystem;

struct GenOptions {
  std::size_t scenes = 0;
  std::size_t height = 72;
  std::size_t width = 192;
  double prevalence = 0.3;
  std::optional<std::uint64_t> seed;
  fs::path out;
};

struct PreprocessOptions {
  fs::path in;
  fs::path out;
  bool augment = false;
  std::optional<std::uint64_t> seed;
};

struct TrainCliOptions {
  std::string model;  // simple-cnn | resnet-lite | unet-seg | unet-frp
  std::optional<int> epochs;
  std::optional<std::size_t> batch;
  double lr = 1e-3;
  std::optional<std::uint64_t> seed;
  fs::path data;
  fs::path out;
  std::size_t unet_width = 32;
  int unet_depth = 3;
  bool deep_supervision = true;
  bool all_patches = false;  // U-Nets default to fire-labelled patches
};

struct EvalOptions {
  fs::path data;
  fs::path classifier;
  std::optional<fs::path> unet;
  std::string task = "seg";
  std::size_t threads = 1;
  fs::path out;
};

struct BenchCliOptions {
  std::string pipeline = "both";  // single | pyrofocus | both
  std::string task = "seg";
  fs::path classifier;
  fs::path unet;
  fs::path data;
  std::size_t repeats = 10;
  std::size_t warmup = 2;
  std::size_t threads = 1;
  std::size_t top = 10;
  fs::path report;
  std::optional<fs::path> sweep;
};

struct InferOptions {
  fs::path scene;
  fs::path classifier;
  fs::path unet;
  std::string task = "seg";
  std::size_t threads = 1;
  fs::path out;  // prefix
};

struct RenderOptions {
  fs::path scene;
  fs::path prediction;
  std::string task = "seg";
  fs::path out;  // prefix
};

void cmd_gen(const GenOptions& o);
void cmd_preprocess(const PreprocessOptions& o);
void cmd_train(const TrainCliOptions& o);
void cmd_eval(const EvalOptions& o);
void cmd_bench(const BenchCliOptions& o);
void cmd_infer(const InferOptions& o);
void cmd_render(const RenderOptions& o);

/// Parses and runs one command line; returns the process exit code
/// (0 ok, 2 usage/validation, 3 missing input, 4 incompatible, 1 other).
/// Errors go to stderr as "pyrofocus: error[<kind>]: <message>".
int run_cli(int argc, const char* const* argv);

}  // namespace pyrofocus::cli
