#pragma once

/// @file runner.hpp
/// @brief Batch execution: single runs, seeded ensembles, manifests and reports.
///
/// A run directory holds
///   trajectory.csv   t, alpha_i (or shell coefficients), dB_m
///   ledger.csv       energy accounts per output time
///   diagnostics.json mode-specific reports
///   manifest.json    config hash, seed, seed rule, version, file list with FNV-1a digests

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsilab/config.hpp"

namespace fsilab {

enum class RunStatus { Completed = 0, StoppedEarly = 3, NonConvergence = 4 };
std::string to_string(RunStatus s);
int exit_code(RunStatus s);

struct RunOutcome {
  RunStatus status = RunStatus::Completed;
  double stop_time = 0.0;
  std::filesystem::path dir;
  std::vector<std::string> files;
  // summary numbers reused by ensembles
  double final_energy = 0.0;
  double initial_energy = 0.0;
  double max_ledger_residual = 0.0;
  double frac_ladder_max = 0.0;
};

/// Library version string compiled into manifests.
std::string version();

/// Output directory of a config: output.dir, resolved against FSILAB_OUTPUT_ROOT when relative and set.
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

/// Runs one trajectory under `cfg.seed` into `dir`.
RunOutcome run(const RunConfig& cfg, const std::filesystem::path& dir);
inline RunOutcome run(const RunConfig& cfg) { return run(cfg, resolve_output_dir(cfg)); }

struct Stats {
  double mean = 0.0, variance = 0.0, min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};
Stats summarize(std::vector<double> x);

struct EnsembleOutcome {
  std::vector<RunOutcome> members;
  std::vector<std::uint64_t> seeds;
  Stats final_energy, energy_drift, ledger_residual, frac_ladder_max;
  RunStatus status = RunStatus::Completed;  ///< worst member status
};

/// Member i runs with seed derive_seed(cfg.seed, i) into dir/member_<i>; threads = 0 picks hardware concurrency.
EnsembleOutcome ensemble(const RunConfig& cfg, int paths, const std::filesystem::path& dir, int threads = 0);

/// Reads a run directory, checks the manifest digests and returns a printable summary.
/// Throws std::runtime_error when a listed file is missing or its digest differs.
std::string report(const std::filesystem::path& run_dir, int* status_code = nullptr);

std::uint64_t file_digest(const std::filesystem::path& p);

}  // namespace fsilab
