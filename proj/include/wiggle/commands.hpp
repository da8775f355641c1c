#pragma once

#include <exception>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "wiggle/config.hpp"

namespace wiggle {

struct CommandResult {
  std::filesystem::path manifest;
  nlohmann::json summary;  // short, machine-readable digest printed by the CLI
};

// Each command writes its CSV/JSON outputs into config.output_dir, validates
// them, and only then writes manifest.json (any stale manifest is removed first).
CommandResult cmd_profile(const RunConfig& config);
CommandResult cmd_scan_q(const RunConfig& config);
CommandResult cmd_ensemble(const RunConfig& config);
CommandResult cmd_dot_sweep(const RunConfig& config);
CommandResult cmd_fit_transition(const RunConfig& config);
CommandResult cmd_fit_leverarm(const RunConfig& config);

CommandResult run_command(const RunConfig& config);

/// 2 config/spec, 3 I/O, 4 numerical, 5 fit, 1 anything else.
int exit_code_for(const std::exception& error);
std::string error_category(const std::exception& error);

/// Output file stem for a concentration, e.g. "avg0.05" or "peak0.09".
std::string concentration_tag(double value, ConcentrationConvention convention);

}  // namespace wiggle
