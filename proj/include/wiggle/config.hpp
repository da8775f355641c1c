#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wiggle/disorder.hpp"
#include "wiggle/heterostructure.hpp"
#include "wiggle/spectrofit.hpp"
#include "wiggle/valley.hpp"

namespace wiggle {

/// A parsed config file with the source line of every key (JSON pointer -> line).
struct ConfigDocument {
  nlohmann::json data = nlohmann::json::object();
  std::map<std::string, int> lines;
  std::filesystem::path path;  // empty for in-memory documents
  std::string command;         // set when loaded from a manifest

  /// "file:line: " prefix for a JSON pointer, or "file: " when unknown.
  std::string where(const std::string& pointer) const;
};

enum class ConfigFormat { toml, json };

ConfigDocument parse_config(const std::string& text, ConfigFormat format, const std::filesystem::path& origin = {});
/// Format from the extension (.toml or .json). A manifest's "config" block is unwrapped.
ConfigDocument load_config(const std::filesystem::path& path);

/// Command-line values that override config keys.
struct CliOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> mode;
  std::optional<std::string> table;
};

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "WIGGLE_OUTPUT_ROOT";

enum class ConcentrationConvention { average, peak };

struct ScanSettings {
  std::vector<double> concentrations;  // as given
  ConcentrationConvention convention = ConcentrationConvention::average;
  std::vector<double> q_values;
};

struct EnsembleSettings {
  std::vector<double> concentrations;
  ConcentrationConvention convention = ConcentrationConvention::average;
  std::size_t n_samples = 40;
};

struct LeverArmSettings {
  std::vector<std::filesystem::path> traces;
  std::vector<TemperaturePoint> points;
  struct Splitting {
    double dV = 0.0;
    double dV_error = 0.0;
  };
  std::vector<Splitting> splittings;
  int max_evaluations = 4000;
};

struct RunConfig {
  std::string command;
  /// Fully resolved configuration (defaults + file + overrides); written to the manifest.
  nlohmann::json resolved;
  std::filesystem::path output_dir;
  int workers = 1;
  std::uint64_t seed = 1;

  MaterialConstants constants;
  ProfileSpec profile;
  PotentialOptions potential;
  ValleyOptions valley;
  std::string table;  // "builtin:single" or an absolute path
  double min_norm = 0.95;

  ScanSettings scan;
  EnsembleSettings ensemble;
  DotGeometry dot;
  FieldExtent extent;
  SweepSchedule sweep;
  std::size_t n_seeds = 20;

  std::vector<std::filesystem::path> traces;  // fit-transition
  int max_evaluations = 4000;
  LeverArmSettings leverarm;

  /// Amplitude (peak) for a concentration in the configured convention.
  static double peak_amplitude(double value, ConcentrationConvention convention);
};

const std::vector<std::string>& command_names();

/// Merges command defaults, the document (if any) and CLI overrides, then
/// validates everything. Throws ConfigError with file:line context.
RunConfig resolve_config(const std::string& command, const ConfigDocument* document, const CliOverrides& overrides);

}  // namespace wiggle
