#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wiggle/commands.hpp"
#include "wiggle/config.hpp"
#include "wiggle/errors.hpp"

namespace {

void report_error(const std::exception& e, int code) {
  const nlohmann::json line = {{"error", wiggle::error_category(e)}, {"message", e.what()}, {"exit_code", code}};
  std::cerr << line.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Valley splitting in oscillating-Ge Si/SiGe quantum wells"};
  app.set_version_flag("--version", std::string(WIGGLE_VERSION));
  app.require_subcommand(1);

  struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string mode;
    std::string table;
  } opts;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"profile", "Build a concentration profile, potential and envelope"},
      {"scan-q", "Valley splitting versus oscillation wavevector"},
      {"ensemble", "Alloy-disorder ensembles of the valley splitting"},
      {"dot-sweep", "Moving-dot and stationary-dot orbital sweeps"},
      {"fit-transition", "Fit charge-sensor transition traces"},
      {"fit-leverarm", "Fit lever arm and electron temperature"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "TOML or JSON config (a manifest.json also works)");
    sub->add_option("--out", opts.out, fmt::format("Output directory (default ${}/<command>)", wiggle::kOutputRootEnv));
    sub->add_option("--seed", opts.seed, "Base seed");
    sub->add_option("--workers", opts.workers, "Worker threads")->check(CLI::Range(1, 1024));
    if (name != "fit-transition" && name != "fit-leverarm") {
      sub->add_option("--mode", opts.mode, "Valley solver")->check(CLI::IsMember({"perturbative", "two-component"}));
      sub->add_option("--table", opts.table, "Bloch coefficient table CSV or builtin:single");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string command;
  for (auto* sub : subs)
    if (sub->parsed()) command = sub->get_name();

  try {
    wiggle::CliOverrides overrides;
    for (auto* sub : subs) {
      if (!sub->parsed()) continue;
      if (sub->count("--out")) overrides.out = opts.out;
      if (sub->count("--seed")) overrides.seed = opts.seed;
      if (sub->count("--workers")) overrides.workers = opts.workers;
      if (sub->get_option_no_throw("--mode") && sub->count("--mode")) overrides.mode = opts.mode;
      if (sub->get_option_no_throw("--table") && sub->count("--table")) overrides.table = opts.table;
    }
    std::optional<wiggle::ConfigDocument> doc;
    if (!opts.config.empty()) doc = wiggle::load_config(opts.config);
    if (doc && !doc->command.empty() && doc->command != command)
      throw wiggle::ConfigError(fmt::format("{}: manifest was written by '{}', not '{}'", opts.config, doc->command, command));
    const auto rc = wiggle::resolve_config(command, doc ? &*doc : nullptr, overrides);
    const auto result = wiggle::run_command(rc);
    nlohmann::json line = {{"status", "ok"}, {"command", command}, {"manifest", result.manifest.string()},
                           {"summary", result.summary}};
    std::cout << line.dump() << std::endl;
    return 0;
  } catch (const std::exception& e) {
    const int code = wiggle::exit_code_for(e);
    report_error(e, code);
    return code;
  }
}
