#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ghdo/lindblad.hpp"
#include "ghdo/netcore.hpp"
#include "ghdo/tdvp.hpp"

namespace ghdo::cli {

/// Exit status for configuration and usage errors.
inline constexpr int kUsageError = 2;

struct PhysicsConfig {
  double V = 2.0;
  std::vector<double> g{1.0};
  double gamma = 1.0;
  bool periodic = true;
  /// Extra terms appended to the TFIM Hamiltonian and jump list.
  std::vector<LocalOperator> hamiltonian;
  std::vector<LocalOperator> jumps;

  LindbladModel model(int sites, double g_value) const;
};

struct OutputConfig {
  std::filesystem::path directory = "ghdo_out";
  std::size_t checkpoint_interval = 0;  // 0: only at exit
  bool dump_samples = false;
  /// Start each g point from the previous point's final parameters.
  bool warm_start = false;
  std::size_t final_samples = 16384;
};

struct RunConfig {
  NetworkSpec model;
  PhysicsConfig physics;
  TdvpConfig tdvp;
  std::uint64_t sampler_seed = 1;
  OutputConfig output;
};

/// Sections model, physics, tdvp, output. Unknown keys and out-of-range
/// values throw ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& doc);
nlohmann::json load_config_file(const std::filesystem::path& path);
/// Applies "section.key=value" with value parsed as JSON, falling back to a
/// plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Runs every g point; writes diagnostics CSVs, checkpoints and summary.json
/// into the output directory and returns the summary.
nlohmann::json cmd_run(const RunConfig& config, std::ostream& log);
nlohmann::json cmd_estimate(const std::filesystem::path& checkpoint, std::size_t samples, double alpha,
                            std::uint64_t seed, int threads);
/// Dense steady state of every g point (N <= 6). With `matrix_dir`, each
/// steady state is also written in the ghdo-matrix text format.
nlohmann::json cmd_oracle(const RunConfig& config, const std::filesystem::path& matrix_dir = {});

inline constexpr const char* kCsvHeader =
    "step,time,lloc2,mx,my,mz,purity,cg_iterations,residual,ess,alpha,ok";
void write_csv_row(std::ostream& os, const StepRecord& r);

/// Full command-line entry point; returns the process exit status.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ghdo::cli
