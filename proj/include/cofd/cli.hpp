#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cofd/config.hpp"

namespace cofd::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDesignFailure = 2, kRuntimeFailure = 3 };

// Overrides the configured output directory (the --out flag wins).
inline constexpr const char* kOutputEnv = "COFD_OUT_DIR";

struct CommandSpec {
  std::string subcommand;
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> trace;  // analyze: directory holding a previous run
  std::optional<std::uint64_t> seed;
  int seeds = 5;  // sweep
  bool quiet = false;
};

std::filesystem::path output_directory(const CommandSpec& spec, const ScenarioConfig& config);

int cmd_design(const ScenarioConfig& config, const std::optional<std::filesystem::path>& out, std::ostream& os);
int cmd_simulate(const ScenarioConfig& config, const std::filesystem::path& out, std::ostream& os);
int cmd_analyze(const ScenarioConfig& config, const std::filesystem::path& trace, const std::filesystem::path& out,
                std::ostream& os);
int cmd_sweep(const ScenarioConfig& config, int seeds, const std::filesystem::path& out, std::ostream& os);

// Runs a parsed command; maps library errors onto exit codes.
int execute(const CommandSpec& spec, std::ostream& os, std::ostream& err);

// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace cofd::cli
