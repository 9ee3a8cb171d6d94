#pragma once

#include "carnot/cli/config.hpp"
#include "carnot/cli/json_writer.hpp"
#include "carnot/horizontal_lift.hpp"

#include <filesystem>
#include <optional>
#include <ostream>

namespace carnot::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kNumericalFailure = 3,
};

struct CommandContext {
  // Files (reports, CSV) are written here when set.
  std::optional<std::filesystem::path> out_dir;
  std::ostream* out = nullptr;  // report destination (stdout in the tool)
  std::ostream* err = nullptr;  // diagnostics
};

struct CommandResult {
  int exit_code = kSuccess;
  Report report;
};

CommandResult cmd_analyze(const RunConfig& cfg, const CommandContext& ctx);
CommandResult cmd_integrate(const RunConfig& cfg, const CommandContext& ctx);
CommandResult cmd_classify(const RunConfig& cfg, const CommandContext& ctx);
CommandResult cmd_gradcheck(const RunConfig& cfg, const CommandContext& ctx);

// Loads the config, dispatches by name ("analyze", "integrate", "classify",
// "gradcheck"), prints the report and writes it to <out_dir>/<command>.json.
// Config errors are reported on ctx.err and yield kConfigError.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const CommandContext& ctx);

// CSV with columns t, h_1..h_k, u_1..u_k, x_1..x_k, x_12..x_{(k-1)k},
// H_drift, I_1_drift.. (one per Casimir basis vector).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int k);

// Reads CARNOT_LOG (off|info|debug) and configures the stderr logger.
void configure_logging();

// Command-line entry point used by the carnot tool.
int run_cli(int argc, char** argv);

}  // namespace carnot::cli
