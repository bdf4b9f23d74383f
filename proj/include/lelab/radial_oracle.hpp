#pragma once

#include <span>
#include <vector>

#include "lelab/geometry.hpp"
#include "lelab/lane_emden.hpp"

namespace lelab {

struct RadialSample {
  double r;   // radius on the unit disk
  double u;   // u(r)
  double du;  // u'(r)
};

/// Radial least-energy solution of the Lane-Emden problem on the unit disk.
///
/// Internally the profile is carried in the scale-free variables of the
/// blow-up analysis: u(r) = u0 (1 - 2 tau(s)/p) with s = r/mu_p, integrated
/// in sigma = log s. tau is therefore directly the rescaled deficit, and the
/// first zero of u sits at tau = p/2, i.e. at s0 = 1/mu_p.
class RadialSolution {
 public:
  double p = 0.0;
  double u0 = 0.0;          // u(0) = sup norm on the unit disk
  double r0 = 0.0;          // first zero before the unit-disk rescale
  double log_r0 = 0.0;
  double energy = 0.0;      // p * int |u'|^2 2 pi r dr
  double energy_alt = 0.0;  // p * int u^(p+1) 2 pi r dr
  double log_mu2 = 0.0;
  double err_estimate = 0.0;     // |u0(tol) - u0(10 tol)|
  double max_local_error = 0.0;  // largest accepted local error, absolute units
  int steps = 0;
  std::vector<RadialSample> samples;

  /// log s0 = -log mu_p; the rescaled radius of the boundary circle.
  double sigma_zero() const { return sigma_zero_; }
  double tau(double s) const;
  /// d tau / d log s.
  double tau_log_derivative(double s) const;
  double u(double r) const;
  double du(double r) const;

 private:
  friend struct RadialBuilder;
  double hermite(double sigma, bool derivative) const;

  double sigma_start_ = 0.0;
  double sigma_zero_ = 0.0;
  std::vector<double> sigma_;
  std::vector<double> tau_;
  std::vector<double> dtau_;
  std::vector<double> ddtau_;
};

inline constexpr double kDefaultOdeTol = 1e-11;

/// Shoots the radial problem from the centre with amplitude a, locates the
/// first zero, and rescales onto the unit disk.
RadialSolution shoot(double p, double ode_tol = kDefaultOdeTol, double amplitude = 1.0);

/// Independent shoots for an increasing list of exponents.
std::vector<RadialSolution> oracle_sweep(std::span<const double> p_list,
                                         double ode_tol = kDefaultOdeTol, int jobs = 1);

/// Samples the radial solution onto a grid over disk(R) (using the scaling
/// u_R(x) = R^(-2/(p-1)) u(|x|/R)) and packages it as a record.
SolutionRecord oracle_record(const RadialSolution& solution, const GridPtr& grid);

}  // namespace lelab
