#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "uvol/config.hpp"

namespace uvol::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_validation = 4 };

struct CommandResult {
    int exit_code = exit_ok;
    nlohmann::json report;
    std::string summary;  // one line for stdout
};

/// Each command writes its result files below cfg.output_dir and returns the JSON report
/// it wrote. Nothing time-dependent ends up in the files.
CommandResult cmd_price(const RunConfig& cfg);
CommandResult cmd_mc_bound(const RunConfig& cfg);
CommandResult cmd_hedge_sim(const RunConfig& cfg);
CommandResult cmd_validate(const RunConfig& cfg);
CommandResult cmd_surface(const RunConfig& cfg);
CommandResult cmd_convergence(const RunConfig& cfg);

/// Dispatches by subcommand name; throws ConfigError for an unknown name.
CommandResult run_command(const std::string& name, const RunConfig& cfg);

/// %.17g, the round-trip format of every CSV number.
std::string format_number(double v);

}  // namespace uvol::cli
