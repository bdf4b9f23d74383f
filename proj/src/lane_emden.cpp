#include "lelab/lane_emden.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "lelab/error.hpp"
#include "lelab/format.hpp"

namespace lelab {

void SolveParams::validate() const {
  ensure(std::isfinite(p_start) && p_start > 1.0, ErrorKind::InvalidArgument, "p_start must be > 1");
  ensure(!p_targets.empty(), ErrorKind::InvalidArgument, "p_targets must not be empty");
  ensure(p_targets.front() >= p_start, ErrorKind::InvalidArgument,
         "p_targets[0] must be >= p_start");
  for (std::size_t i = 1; i < p_targets.size(); ++i) {
    ensure(p_targets[i] > p_targets[i - 1], ErrorKind::InvalidArgument,
           "p_targets must be strictly increasing");
  }
  ensure(continuation_ratio > 1.0 && continuation_ratio <= 1.5, ErrorKind::InvalidArgument,
         "continuation_ratio must lie in (1, 1.5]");
  ensure(newton_tol > 0.0 && gd_tol > 0.0, ErrorKind::InvalidArgument, "tolerances must be > 0");
  ensure(max_newton_steps > 0, ErrorKind::InvalidArgument, "max_newton_steps must be > 0");
  ensure(damping_min > 0.0 && damping_min <= 1.0, ErrorKind::InvalidArgument,
         "damping_min must lie in (0, 1]");
}

double log_mu2_from(double p, double sup_norm) {
  return std::log(8.0) - std::log(p) - (p - 1.0) * std::log(sup_norm);
}

namespace {

std::vector<double> residual_vector(const DiscreteLaplacian& op, std::span<const double> u,
                                    double p) {
  std::vector<double> f(u.size());
  op.apply(u, f);
  for (std::size_t k = 0; k < u.size(); ++k) f[k] -= pow_log(u[k], p);
  return f;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double sup_of(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

// Relative size of <F,u> against <Au,u> accepted at convergence.
constexpr double kIdentityMargin = 1e-11;

double absolute_tolerance(double rel, double p, double sup_norm) {
  // max(1, sup^p) without overflow: the exponent is capped far above any
  // exponent a grid record can reach.
  const double lg = std::max(0.0, p * std::log(std::max(sup_norm, 1e-300)));
  return rel * std::exp(std::min(lg, 700.0));
}

/// Smallest eigenvalue of the five-point Laplacian on the lattice bounding box;
/// a lower bound for the first eigenvalue on any sub-domain.
double box_eigenvalue(const Grid& g) {
  const double h = g.spacing();
  const double sx = std::sin(std::numbers::pi / (2.0 * (g.nx() - 1)));
  const double sy = std::sin(std::numbers::pi / (2.0 * (g.ny() - 1)));
  return 4.0 / (h * h) * (sx * sx + sy * sy);
}

}  // namespace

double equation_residual(const GridField& u, double p) {
  DiscreteLaplacian op(u.grid);
  return max_abs(residual_vector(op, u.values, p));
}

double energy_identity_gap(const SolutionRecord& record) {
  const GridField au = apply_laplacian(record.u);
  const double h = record.u.grid->spacing();
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t k = 0; k < au.values.size(); ++k) {
    lhs += au.values[k] * record.u.values[k];
    rhs += pow_log(record.u.values[k], record.p + 1.0);
  }
  return record.p * std::abs(lhs - rhs) * h * h;
}

SolutionRecord make_record(GridField u, double p, const NewtonReport& report) {
  SolutionRecord rec;
  rec.p = p;
  rec.newton = report;
  const GridField au = apply_laplacian(u);
  const double h = u.grid->spacing();
  rec.energy = p * dot(au.values, u.values) * h * h;
  // Interior unknowns are stored in row-major node order, so the first
  // maximum is the lexicographically smallest argmax.
  std::size_t best = 0;
  for (std::size_t k = 1; k < u.values.size(); ++k) {
    if (u.values[k] > u.values[best]) best = k;
  }
  rec.sup_norm = u.values[best];
  rec.peak_node = u.grid->interior_nodes()[best];
  rec.peak = u.grid->node_point(rec.peak_node);
  rec.log_mu2 = log_mu2_from(p, rec.sup_norm);
  rec.u = std::move(u);
  return rec;
}

GridField solve_minimizer(const GridPtr& grid, double p, double gd_tol,
                          const LaplaceFactorization* factor) {
  ensure(p > 1.0, ErrorKind::InvalidArgument, "solve_minimizer needs p > 1");
  DiscreteLaplacian op(grid);
  const std::size_t n = grid->interior_count();
  const double h2 = grid->spacing() * grid->spacing();

  auto normalize = [&](std::vector<double>& v) {
    double mass = 0.0;
    for (double x : v) mass += pow_log(x, p + 1.0);
    mass *= h2;
    if (!(mass > 0.0)) throw Error(ErrorKind::NonPositive, "minimiser vanished on the whole interior");
    const double scale = std::exp(-std::log(mass) / (p + 1.0));
    for (double& x : v) x *= scale;
  };
  std::vector<double> av(n);
  auto dirichlet = [&](const std::vector<double>& v) {
    op.apply(v, av);
    return dot(av, v) * h2;
  };

  // A is fixed here, so one factorisation serves every inverse iteration.
  std::unique_ptr<LaplaceFactorization> own;
  if (factor == nullptr) {
    own = std::make_unique<LaplaceFactorization>(grid);
    factor = own.get();
  }
  ensure(factor->grid().get() == grid.get(), ErrorKind::GridMismatch,
         "factorisation belongs to another grid");
  // Torsion function as the starting point.
  GridField v = factor->solve(GridField(grid, 1.0));
  normalize(v.values);
  double q = dirichlet(v.values);

  GridField w;
  GridField rhs(grid);
  std::vector<double> trial(n);
  for (int it = 0; it < 500; ++it) {
    // At the constrained critical point Av = lambda v^p with lambda = q.
    op.apply(v.values, av);
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double vp = pow_log(v.values[k], p);
      worst = std::max(worst, std::abs(av[k] - q * vp));
      scale = std::max(scale, q * vp);
    }
    if (worst <= gd_tol * scale) break;

    for (std::size_t k = 0; k < n; ++k) rhs.values[k] = q * pow_log(v.values[k], p);
    w = factor->solve(rhs);

    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1e-6) {
      for (std::size_t k = 0; k < n; ++k) {
        trial[k] = std::max(0.0, v.values[k] + alpha * (w.values[k] - v.values[k]));
      }
      normalize(trial);
      const double q_trial = dirichlet(trial);
      if (q_trial < q) {
        v.values.swap(trial);
        q = q_trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }

  double mass = 0.0;
  for (double x : v.values) mass += pow_log(x, p + 1.0);
  const double lambda = q / (mass * h2);
  const double c = std::exp(std::log(lambda) / (p - 1.0));
  for (double& x : v.values) x *= c;
  if (!std::any_of(v.values.begin(), v.values.end(), [](double x) { return x > 0.0; })) {
    throw Error(ErrorKind::NonPositive, "minimiser vanished on the whole interior");
  }
  return v;
}

namespace detail {

MinresResult minres(const LinearMap& apply, std::span<const double> rhs, const LinearMap& precond,
                    double tol, int max_iterations) {
  const std::size_t n = rhs.size();
  MinresResult out;
  out.x.assign(n, 0.0);

  std::vector<double> r1(rhs.begin(), rhs.end()), r2 = r1, y(n), v(n), w(n, 0.0), w1(n, 0.0),
      w2(n, 0.0);
  precond(r1, y);
  double beta1 = dot(r1, y);
  if (beta1 == 0.0) {
    out.converged = true;
    return out;
  }
  beta1 = std::sqrt(beta1);

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  for (int itn = 1; itn <= max_iterations; ++itn) {
    const double s = 1.0 / beta;
    for (std::size_t k = 0; k < n; ++k) v[k] = s * y[k];
    apply(v, y);
    if (itn >= 2) {
      const double c = beta / oldb;
      for (std::size_t k = 0; k < n; ++k) y[k] -= c * r1[k];
    }
    const double alfa = dot(v, y);
    const double c2 = alfa / beta;
    for (std::size_t k = 0; k < n; ++k) y[k] -= c2 * r2[k];
    r1.swap(r2);
    r2.swap(y);
    precond(r2, y);
    oldb = beta;
    beta = dot(r2, y);
    if (beta < 0.0) break;
    beta = std::sqrt(beta);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::min());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1.swap(w2);
    w2.swap(w);
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) / gamma;
      out.x[k] += phi * w[k];
    }
    out.iterations = itn;
    out.relative_residual = phibar / beta1;
    if (phibar <= tol * beta1 || beta == 0.0) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace detail

SolutionRecord newton_refine(const GridField& u0, double p, const SolveParams& params,
                             const LaplaceFactorization* factor) {
  ensure(p > 1.0, ErrorKind::InvalidArgument, "newton_refine needs p > 1");
  ensure(u0.is_positive(), ErrorKind::NonPositive, "Newton start must be positive");
  const GridPtr& grid = u0.grid;
  DiscreteLaplacian op(grid);
  const std::size_t n = grid->interior_count();
  const double inv_h2 = 1.0 / (grid->spacing() * grid->spacing());
  const double trivial_bound = std::log(box_eigenvalue(*grid));
  const int max_linear = 4 * default_max_cg_iterations(n);
  ensure(factor == nullptr || factor->grid().get() == grid.get(), ErrorKind::GridMismatch,
         "factorisation belongs to another grid");

  std::vector<double> u = u0.values;
  std::vector<double> f = residual_vector(op, u, p);
  std::vector<double> shift(n), inv_precond(n), trial(n);
  double f2 = std::sqrt(dot(f, f));
  int steps = 0;

  auto fail = [&](ErrorKind kind, const std::string& why) {
    throw Error(kind, "p=" + format_real(p) + ": " + why);
  };

  while (true) {
    const double sup = sup_of(u);
    const double tol = absolute_tolerance(params.newton_tol, p, sup);
    const double finf = max_abs(f);
    // Integration by parts is exact only once the residual is tiny compared
    // with the energy; polish until <F,u> is negligible as well.
    double mass = 0.0;
    for (double x : u) mass += pow_log(x, p + 1.0);
    const double fu = dot(f, u);
    const bool identity_ok = std::abs(fu) <= kIdentityMargin * std::abs(fu + mass);
    if (finf <= tol && identity_ok) {
      // A positive solution satisfies lambda_1 <= sup^(p-1); anything below
      // that is the trivial root seen through round-off.
      if ((p - 1.0) * std::log(sup) < trivial_bound) {
        fail(ErrorKind::NewtonDiverged, "iterates collapsed onto the trivial root");
      }
      GridField solution(grid);
      solution.values = std::move(u);
      return make_record(std::move(solution), p, NewtonReport{steps, finf, tol});
    }
    if (steps >= params.max_newton_steps) {
      fail(ErrorKind::NewtonDiverged, "no convergence in " + std::to_string(steps) +
                                          " steps (residual " + format_real(finf) + ")");
    }

    for (std::size_t k = 0; k < n; ++k) {
      shift[k] = p * pow_log(u[k], p - 1.0);
      inv_precond[k] = 1.0 / (4.0 * inv_h2 + shift[k]);
    }
    auto jac = [&](std::span<const double> x, std::span<double> y) {
      op.apply(x, y);
      for (std::size_t k = 0; k < n; ++k) y[k] -= shift[k] * x[k];
    };
    std::vector<double> neg_f(n);
    for (std::size_t k = 0; k < n; ++k) neg_f[k] = -f[k];
    // Aim the linear solve slightly below the Newton tolerance.
    const double eta = finf <= tol ? 1e-12 : std::clamp(0.05 * tol / finf, 1e-13, 1e-4);
    detail::LinearMap precond;
    if (factor != nullptr) {
      precond = [factor](std::span<const double> x, std::span<double> y) { factor->solve(x, y); };
    } else {
      precond = [&](std::span<const double> x, std::span<double> y) {
        for (std::size_t k = 0; k < n; ++k) y[k] = inv_precond[k] * x[k];
      };
    }
    detail::MinresResult lin = detail::minres(jac, neg_f, precond, eta, max_linear);
    if (!lin.converged && !(lin.relative_residual < 1e-2)) {
      fail(ErrorKind::JacobianSolveFailed,
           "MINRES stalled at relative residual " + format_real(lin.relative_residual));
    }

    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= params.damping_min) {
      bool positive = true;
      for (std::size_t k = 0; k < n && positive; ++k) {
        trial[k] = u[k] + alpha * lin.x[k];
        positive = trial[k] > 0.0;
      }
      if (positive) {
        std::vector<double> ft = residual_vector(op, trial, p);
        const double ft2 = std::sqrt(dot(ft, ft));
        if (ft2 < f2) {
          u.swap(trial);
          f.swap(ft);
          f2 = ft2;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    ++steps;
    if (!accepted) {
      fail(ErrorKind::NewtonDiverged, "damping fell below damping_min at step " +
                                          std::to_string(steps));
    }
  }
}

std::vector<SolutionRecord> continue_in_p(const GridPtr& grid, const SolveParams& params,
                                          const ContinuationObserver& observer) {
  params.validate();
  std::vector<SolutionRecord> out;
  const LaplaceFactorization factor(grid);
  GridField start = solve_minimizer(grid, params.p_start, params.gd_tol, &factor);
  SolutionRecord current = newton_refine(start, params.p_start, params, &factor);
  if (observer) observer(current);

  std::size_t next = 0;
  if (params.p_targets.front() == params.p_start) {
    out.push_back(current);
    next = 1;
  }
  const double max_step = std::log(params.continuation_ratio);
  double step = max_step;
  while (next < params.p_targets.size()) {
    const double target = params.p_targets[next];
    const double p_next = std::min(target, current.p * std::exp(step));
    try {
      SolutionRecord rec = newton_refine(current.u, p_next, params, &factor);
      current = std::move(rec);
      if (observer) observer(current);
      step = std::min(max_step, 2.0 * step);
      if (p_next == target) {
        out.push_back(current);
        ++next;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NewtonDiverged && e.kind() != ErrorKind::JacobianSolveFailed &&
          e.kind() != ErrorKind::NonPositive) {
        throw;
      }
      step *= 0.5;
      if (step < 1e-4) {
        // The warm-started branch folded back. Past a fold the least-energy
        // solution sits on another branch, so restart from the minimiser.
        const double p_jump = std::min(target, current.p * std::exp(max_step));
        try {
          current = newton_refine(solve_minimizer(grid, p_jump, params.gd_tol, &factor), p_jump,
                                  params, &factor);
        } catch (const Error& again) {
          throw Error(ErrorKind::StepUnderflow, "continuation step underflow near p=" +
                                                    format_real(p_next) + " (" + e.what() +
                                                    "; restart: " + again.what() + ")");
        }
        if (observer) observer(current);
        step = max_step;
        if (p_jump == target) {
          out.push_back(current);
          ++next;
        }
      }
    }
  }
  return out;
}

}  // namespace lelab
