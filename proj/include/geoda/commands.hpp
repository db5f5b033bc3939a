#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "geoda/run_config.hpp"

namespace geoda {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // algorithmic failure (e.g. calibration never settled)
  kExitConfig = 2,
  kExitOracle = 3,
  kExitIo = 4,
};

int exit_code_for(ErrorCode code);

/// Run the configured batch, write the JSON report and CSV into the output
/// directory and print the summary line.
int cmd_attack(const std::filesystem::path& config_path, const ConfigOverrides& overrides,
               std::ostream& out, std::ostream& err);

/// Print T and the per-iteration counts. `iterations` fixes T instead of
/// deriving it from the first-iteration floor.
int cmd_schedule(std::size_t budget, double lambda, std::optional<std::size_t> iterations,
                 std::size_t first_iter_floor, std::ostream& out, std::ostream& err);

/// Find the first image's boundary point and calibrate sigma there.
int cmd_calibrate_sigma(const std::filesystem::path& config_path,
                        const ConfigOverrides& overrides, std::ostream& out, std::ostream& err);

/// Re-summarize an existing JSON report.
int cmd_report(const std::filesystem::path& report_path, std::ostream& out, std::ostream& err);

}  // namespace geoda
