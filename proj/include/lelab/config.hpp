#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lelab/bubbles.hpp"
#include "lelab/geometry.hpp"
#include "lelab/lane_emden.hpp"
#include "lelab/radial_oracle.hpp"

namespace lelab {

enum class BubbleSource { Auto, Grid, Oracle };

struct BubbleSettings {
  double R = 10.0;
  std::optional<double> beta;  // default 0.1 * diameter
  double threshold = 0.5;
  std::vector<double> radii;
  BubbleSource source = BubbleSource::Auto;
  std::vector<double> p_select;  // default: solve.p_targets
  double oracle_spacing = kDefaultOracleSpacing;
};

struct GreenSettings {
  double probe_spacing = 1.0 / 16.0;
  std::optional<double> fd_step;  // default 4h
  double kr_tol = 1e-3;
  int n = 1;
  std::vector<Point> test_points;
  int random_starts = 4;
  int max_iterations = 40;
  std::optional<double> delta;  // default 5h
  std::vector<double> convloc_p;
};

struct OracleSettings {
  std::vector<double> p_list;
  double ode_tol = kDefaultOdeTol;
};

struct ExperimentConfig {
  DomainSpec domain = DomainSpec::disk(1.0);
  double h = 1.0 / 128.0;
  SolveParams solve;
  BubbleSettings bubble;
  GreenSettings green;
  OracleSettings oracle;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  int jobs = 1;

  double fd_step() const { return green.fd_step.value_or(4.0 * h); }
  double delta() const { return green.delta.value_or(5.0 * h); }
  double beta() const { return bubble.beta.value_or(0.1 * domain.diameter()); }
  /// Exponents analysed by the bubble command.
  const std::vector<double>& bubble_exponents() const {
    return bubble.p_select.empty() ? solve.p_targets : bubble.p_select;
  }
};

/// Parses the JSON text of a config. Unknown keys, wrong types and invalid
/// values raise Error(Config) naming the offending key; `origin` prefixes
/// the message (usually the file path).
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::string& path);

/// "10,20,50" -> {10, 20, 50}.
std::vector<double> parse_real_list(const std::string& text);

/// Checks that hold for every subcommand; throws Error(Config).
void validate_config(const ExperimentConfig& config);
/// validate_config plus the checks that only the bubble (peak radius) and
/// green (probe, difference and exclusion lengths against h) commands need.
void validate_bubble_config(const ExperimentConfig& config);
void validate_green_config(const ExperimentConfig& config);

}  // namespace lelab
