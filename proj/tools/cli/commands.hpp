#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cli/plots.hpp"

namespace rps::cli {

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_runtime = 3 };

// Failure of one pipeline stage; the message names the stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, ExitCode code, const std::string& what)
      : std::runtime_error("stage '" + stage + "': " + what), stage_(std::move(stage)), code_(code) {}
  const std::string& stage() const { return stage_; }
  ExitCode code() const { return code_; }

 private:
  std::string stage_;
  ExitCode code_;
};

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::filesystem::path out = ".";
  PlotFormat plots = PlotFormat::none;
};

struct SynthArgs {
  std::filesystem::path scene;
};

struct SimulateArgs {
  std::filesystem::path depth;
  std::filesystem::path radar;
  bool baseline = false;
  std::optional<std::filesystem::path> truth;  // ground-truth CSV for the baseline fit
  std::size_t truth_part = 0;
  double baseline_amplitude = 0.005;  // m
};

struct EvaluateArgs {
  std::filesystem::path cube_a;
  std::filesystem::path cube_b;
  std::optional<std::filesystem::path> region;
  std::optional<std::filesystem::path> truth;
  std::size_t truth_part = 0;
};

struct ReportArgs {
  std::vector<std::filesystem::path> reports;
};

void run_synth(const SynthArgs& args, const CommonOptions& common);
void run_simulate(const SimulateArgs& args, const CommonOptions& common);
void run_evaluate(const EvaluateArgs& args, const CommonOptions& common);
void run_report(const ReportArgs& args, const CommonOptions& common);

// spdlog level from RPS_LOG (trace, debug, info, warn, error, off); unset
// means info.
void configure_logging();

}  // namespace rps::cli
