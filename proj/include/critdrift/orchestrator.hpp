#pragma once
// Experiment pipelines behind the command-line tool: each subcommand runs its
// pipeline, writes JSON reports, CSV diagnostics and fields into the output
// directory and finishes with manifest.json listing every file with its
// SHA-256 digest.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "critdrift/config.hpp"

namespace critdrift {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Subcommand { norm, formbound, mollify, solve, verify, sde, all };

Subcommand parse_subcommand(const std::string& name);
const char* subcommand_name(Subcommand cmd);

struct RunOptions {
  /// Text the config was parsed from; hashed into the manifest.
  std::string config_text;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<ToleranceTier> tier;
  bool parallel = false;
  /// Human-readable progress and tables; nullptr silences them.
  std::ostream* log = nullptr;
};

struct CheckOutcome {
  std::string id;
  bool passed = false;
  /// Empty unless the check did not apply to this configuration.
  std::string skipped_reason;
  std::string detail;
};

struct ManifestEntry {
  std::string path;  ///< relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_sha256;
  std::string tool_version;
  std::string started_utc;
  std::string finished_utc;
  std::string subcommand;
  std::vector<ManifestEntry> files;
  bool passed = false;
};

struct RunResult {
  bool passed = false;
  std::vector<CheckOutcome> checks;
  RunManifest manifest;
  std::filesystem::path output_dir;
};

/// Runs one pipeline. Module errors propagate with the stage name prefixed.
RunResult run(Subcommand cmd, ExperimentConfig config, const RunOptions& options);

/// 0 if every non-skipped check passed, 1 otherwise.
int exit_status(const RunResult& result);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Every regular file under dir (manifest.json excluded), sorted, with digests.
std::vector<ManifestEntry> scan_artifacts(const std::filesystem::path& dir);

}  // namespace critdrift
