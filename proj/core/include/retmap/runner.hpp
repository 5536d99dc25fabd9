#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "retmap/scenario.hpp"

namespace retmap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitNumeric = 3;

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  /// Omit wall time from the manifest, for byte-level comparisons.
  bool deterministic_manifest = false;
};

struct RunResult {
  int exit_code = kExitOk;
  std::filesystem::path out_dir;
  std::vector<std::string> files;
  /// One-line diagnostic for nonzero exit codes.
  std::string diagnostic;
};

/// Output directory: --out, then the scenario's output_dir, then
/// $RETMAP_OUT_DIR/<name>, then ./out/<name>.
std::filesystem::path resolve_output_dir(const Scenario& s, const RunOptions& options);

/// Runs a parsed scenario. Writes summary.csv, one CSV per report and
/// manifest.txt. Never throws; failures are reported through the result.
RunResult run_scenario(const Scenario& s, const RunOptions& options, std::ostream& log);

/// Parses, validates and runs a scenario file.
RunResult run_scenario_file(const std::filesystem::path& path, const RunOptions& options, std::ostream& log);

}  // namespace retmap
