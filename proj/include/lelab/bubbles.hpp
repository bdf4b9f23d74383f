#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lelab/geometry.hpp"
#include "lelab/lane_emden.hpp"
#include "lelab/radial_oracle.hpp"

namespace lelab {

struct TauSample {
  Point y;       // rescaled position
  double tau;
  double t_ref;  // log(1 + |y|^2)
};

/// Rescaled deficit tau on a square lattice of the rescaled plane,
/// tau(y) = (p/2)(1 - u(y_p + mu_p y)/sup). Lattice index (a, b) with
/// -K <= a, b <= K sits at y = spacing * (a, b).
struct BubbleProfile {
  double p = 0.0;
  double sup_norm = 0.0;
  double log_mu2 = 0.0;
  Point center;
  double max_radius = 0.0;
  double spacing = 0.0;
  int half_width = 0;
  std::vector<double> tau;
  /// Nodes where the discrete equation holds (grid interior, or inside the
  /// oracle's zero circle).
  std::vector<unsigned char> active;
  /// Bound on |Delta(-tau) - 4(1-2tau/p)^p| implied by the solver residual;
  /// zero for oracle and synthetic profiles.
  double tolerance = 0.0;
  RecordSource source = RecordSource::Grid;
  bool resolved = true;

  int width() const { return 2 * half_width + 1; }
  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>((b + half_width) * width() + (a + half_width));
  }
  Point position(int a, int b) const { return {spacing * a, spacing * b}; }
  /// Lattice samples with |y| <= max_radius, row-major.
  std::vector<TauSample> samples() const;
};

/// Reference bubble t(y) = log(1 + |y|^2).
double liouville_bubble(Point y);

/// Grid-backed extraction on the node-aligned frame around the peak node
/// (rescaled spacing h/mu). Throws ScaleUnderflow when mu < 10h unless
/// allow_unresolved is set; the lattice identities still hold then.
BubbleProfile extract_bubble(const SolutionRecord& record, double R, bool allow_unresolved = false);

inline constexpr double kDefaultOracleSpacing = 0.25;

/// Oracle-backed extraction from the dense output of a radial solution.
BubbleProfile extract_bubble(const RadialSolution& solution, double R,
                             double spacing = kDefaultOracleSpacing);

/// tau = log(1 + |y|^2) sampled exactly, with p = infinity.
BubbleProfile synthetic_liouville_profile(double R, double spacing);

/// max over samples with |y| <= R of |tau - log(1 + |y|^2)|.
double tau_deviation(const BubbleProfile& profile, double R);

struct LiouvilleReport {
  double eq_tau = 0.0;      // max |Delta(-tau) - 4(1 - 2tau/p)^p|
  double liouville = 0.0;   // max |Delta(-tau) - 4 exp(-2tau)|
  double lap_min = 0.0;     // range of Delta(-tau)
  double lap_max = 0.0;
  std::size_t nodes = 0;
};

/// Five-point residuals at active lattice nodes with |y| <= max_radius whose
/// four neighbours are on the lattice.
LiouvilleReport liouville_residual(const BubbleProfile& profile);

/// Closed form of the integral of 4 exp(-2 tau_inf) over |y| <= R.
double liouville_mass(double R);
/// Riemann sum of 4 exp(-2 tau) spacing^2 over samples with |y| <= R.
double profile_mass(const BubbleProfile& profile, double R);

void write_profile(std::ostream& out, const BubbleProfile& profile);
void write_profile(const std::string& path, const BubbleProfile& profile);

struct AverageRow {
  double r = 0.0;
  double u_bar = 0.0;
  double t_bar = 0.0;
  double rho = 0.0;
  bool violation = false;
};

struct AverageReport {
  std::vector<AverageRow> rows;
  double delta0 = 0.0;  // half the distance from the peak to the boundary
  double rho_min = 0.0;
};

inline constexpr double kDefaultRhoMin = 0.8;

/// Circle averages of u and of t_p(y) = log(1 + |y - y_p|^2/mu_p^2) about the
/// peak. Radii at or below 2h are skipped.
AverageReport average_inequality(const SolutionRecord& record, std::span<const double> radii,
                                 double rho_min = kDefaultRhoMin);
/// The same quantities for the radial oracle on the unit disk.
AverageReport average_inequality(const RadialSolution& solution, std::span<const double> radii,
                                 double rho_min = kDefaultRhoMin);
/// rho at r = delta0.
double rho_at_delta0(const RadialSolution& solution);
double rho_at_delta0(const SolutionRecord& record);

struct Extrapolation {
  double limit = 0.0;
  double error = 0.0;
  bool degenerate = false;
};

struct LimitRow {
  double p;
  double value;
};

/// Aitken delta-squared on the last three rows. The error estimate is the
/// change from the previous extrapolant (or from the last value with only
/// three rows).
Extrapolation extrapolate(std::span<const LimitRow> rows);

struct Peak {
  Point location;
  int node = -1;
  double value = 0.0;
  double mass = 0.0;  // max of u over the beta-ball
};

struct PeakReport {
  std::vector<Peak> peaks;
  bool no_peaks = false;
};

inline constexpr double kDefaultThreshold = 0.5;
inline double default_beta(const DomainSpec& domain) { return 0.1 * domain.diameter(); }

/// Local maxima over the 8-neighbourhood above threshold * sup, strongest
/// first, merged when closer than beta.
PeakReport detect_peaks(const SolutionRecord& record, double beta, double threshold = kDefaultThreshold);

struct QuantizationRow {
  double p = 0.0;
  double energy = 0.0;
  double sup_norm = 0.0;
  std::vector<double> masses;
  double log_mu2 = 0.0;
  std::optional<double> tau_dev;  // empty when the bubble was unresolved
  double rho_delta0 = 0.0;
};

struct QuantizationReport {
  std::vector<QuantizationRow> rows;
  std::optional<Extrapolation> energy_limit;
  std::optional<Extrapolation> sup_limit;
  int bubble_count = 0;  // round(E_inf / 8 pi e), or from the last row
};

/// Extrapolates energy and sup over the rows when there are at least three.
QuantizationReport quantization_report(std::vector<QuantizationRow> rows);

std::string quantization_csv(const QuantizationReport& report);

/// log(1/mu^2) / (p log sup); tends to 1 along a blow-up family.
double mup2_ratio(double p, double sup_norm, double log_mu2);
/// Smallest C with |log(1/mu^2) - p log sup| <= C log p over the records.
double mup2_constant(std::span<const SolutionRecord> records);

}  // namespace lelab
