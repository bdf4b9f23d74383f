#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lelab/elliptic.hpp"
#include "lelab/geometry.hpp"

namespace lelab {

struct SolveParams {
  double p_start = 3.0;
  std::vector<double> p_targets;
  double continuation_ratio = 1.15;
  /// Relative Newton tolerance; the absolute tolerance on ||Au - u^p||_inf is
  /// newton_tol * max(1, sup_norm^p).
  double newton_tol = 1e-9;
  int max_newton_steps = 40;
  double damping_min = 1.0 / 64.0;
  double gd_tol = 1e-6;

  void validate() const;
};

enum class RecordSource { Grid, Oracle };

struct NewtonReport {
  int steps = 0;
  double residual = 0.0;   // ||Au - u^p||_inf
  double tolerance = 0.0;  // absolute tolerance the residual was held to
};

/// Converged solution at one exponent with the derived blow-up quantities.
struct SolutionRecord {
  double p = 0.0;
  GridField u;
  double energy = 0.0;  // p <Au, u> h^2
  double sup_norm = 0.0;
  Point peak;
  int peak_node = -1;
  double log_mu2 = 0.0;  // log of mu_p^2, from mu_p^2 p sup^(p-1) = 8
  NewtonReport newton;
  RecordSource source = RecordSource::Grid;
};

/// u^p evaluated as exp(p log u); zero for u <= 0.
inline double pow_log(double u, double p) { return u > 0.0 ? std::exp(p * std::log(u)) : 0.0; }

/// log mu^2 = log 8 - log p - (p-1) log sup_norm.
double log_mu2_from(double p, double sup_norm);

/// ||Au - u^p||_inf for zero Dirichlet data.
double equation_residual(const GridField& u, double p);

/// |p<Au,u>h^2 - p sum(u^(p+1)) h^2|.
double energy_identity_gap(const SolutionRecord& record);

/// Builds the record (energy, peak, scale) for a converged field.
SolutionRecord make_record(GridField u, double p, const NewtonReport& report);

/// Sobolev-gradient minimisation of <Av,v> on {sum v^(p+1) h^2 = 1, v >= 0},
/// followed by the Euler-Lagrange rescale u = lambda^(1/(p-1)) v.
/// A factorisation of A on the same grid may be passed in to avoid refactoring.
GridField solve_minimizer(const GridPtr& grid, double p, double gd_tol = 1e-6,
                          const LaplaceFactorization* factor = nullptr);

/// Damped Newton for Au = u^p with a positivity guard. Linear systems are
/// solved by MINRES, preconditioned with A^{-1} when a factorisation is given
/// and with the Jacobian diagonal otherwise.
SolutionRecord newton_refine(const GridField& u0, double p, const SolveParams& params,
                             const LaplaceFactorization* factor = nullptr);

using ContinuationObserver = std::function<void(const SolutionRecord&)>;

/// Minimiser at p_start, then warm-started Newton steps in p; one record per
/// target. The observer (if any) sees every converged intermediate record.
std::vector<SolutionRecord> continue_in_p(const GridPtr& grid, const SolveParams& params,
                                          const ContinuationObserver& observer = {});

namespace detail {

struct MinresResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator;
/// `precond` applies the inverse of a symmetric positive definite matrix.
MinresResult minres(const LinearMap& apply, std::span<const double> rhs, const LinearMap& precond,
                    double tol, int max_iterations);

}  // namespace detail

}  // namespace lelab
