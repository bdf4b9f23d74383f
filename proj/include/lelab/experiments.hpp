#pragma once

#include <iosfwd>
#include <vector>

#include "lelab/config.hpp"
#include "lelab/lane_emden.hpp"

namespace lelab {

/// Subcommand bodies. Each writes its files into config.output_dir, prints
/// progress and diagnostics to `log`, and returns the exit code
/// (0 success, 1 numerical failure). Config problems throw Error(Config).
int cmd_solve(const ExperimentConfig& config, std::ostream& log);
int cmd_oracle(const ExperimentConfig& config, std::ostream& log);
int cmd_bubble(const ExperimentConfig& config, std::ostream& log);
int cmd_green(const ExperimentConfig& config, std::ostream& log);

/// mu_p >= 10h: the rescaled bubble is resolved by the grid.
bool bubble_resolved(const SolutionRecord& record);

}  // namespace lelab
