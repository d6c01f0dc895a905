#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmcf/config.hpp"
#include "pmcf/error.hpp"

namespace pmcf {

inline constexpr const char* kVersion = "1.0.0";
// Overrides the parent of relative output directories.
inline constexpr const char* kOutputRootEnv = "PMCF_OUTPUT_ROOT";

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::vector<std::string> artifacts;  // relative to the run directory
};

struct RunFailure {
  ErrorKind kind = ErrorKind::numeric;
  std::string stage;
  std::string message;
};

// One value of eps.
struct EpsRun {
  double eps = 0.0;
  std::string dir;  // relative to the output directory
  std::vector<StageRecord> stages;
  std::map<std::string, double> constants;
  std::map<std::string, std::string> notes;
};

struct RunManifest {
  std::string config_echo;
  std::string version = kVersion;
  std::string output_dir;
  std::vector<EpsRun> runs;
  std::map<std::string, double> constants;  // across the eps schedule
  std::optional<RunFailure> failure;
  std::string path;                          // where the manifest was written

  [[nodiscard]] auto ok() const -> bool { return !failure; }
  // Deterministic JSON text; wall-clock fields are omitted when include_timing is false.
  [[nodiscard]] auto to_json(bool include_timing = true) const -> std::string;
};

// cfg.output, placed under $PMCF_OUTPUT_ROOT when that is set and the path is relative.
auto resolve_output_dir(const ExperimentConfig& cfg) -> std::string;

// Runs the configured scenario for every eps. Stage errors are recorded in the
// manifest rather than thrown; the manifest is written last.
auto run_experiment(const ExperimentConfig& cfg) -> RunManifest;

}  // namespace pmcf
