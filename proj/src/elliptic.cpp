#include "lelab/elliptic.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

#include "lelab/error.hpp"
#include "lelab/format.hpp"

namespace lelab {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

DiscreteLaplacian::DiscreteLaplacian(GridPtr grid) : grid_(std::move(grid)) {
  inv_h2_ = 1.0 / (grid_->spacing() * grid_->spacing());
}

DiscreteLaplacian::DiscreteLaplacian(GridPtr grid, std::vector<double> shift)
    : grid_(std::move(grid)), shift_(std::move(shift)) {
  inv_h2_ = 1.0 / (grid_->spacing() * grid_->spacing());
  ensure(shift_.size() == grid_->interior_count(), ErrorKind::GridMismatch,
         "diagonal shift size does not match the grid");
  for (double s : shift_) {
    ensure(std::isfinite(s) && s >= 0.0, ErrorKind::InvalidArgument,
           "diagonal shift must be finite and nonnegative");
  }
}

double DiscreteLaplacian::diagonal(std::size_t k) const {
  return 4.0 * inv_h2_ + (shift_.empty() ? 0.0 : shift_[k]);
}

void DiscreteLaplacian::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto nb = grid_->neighbors(k);
    double sum = 0.0;
    for (int d = 0; d < 4; ++d) {
      if (nb[d] >= 0) sum += x[nb[d]];
    }
    y[k] = (4.0 * x[k] - sum) * inv_h2_;
  }
  if (!shift_.empty()) {
    for (std::size_t k = 0; k < n; ++k) y[k] += shift_[k] * x[k];
  }
}

GridField apply_laplacian(const GridField& u) { return apply_laplacian(u, u.boundary); }

GridField apply_laplacian(const GridField& u, std::span<const double> boundary_data) {
  const Grid& g = *u.grid;
  ensure(u.values.size() == g.interior_count(), ErrorKind::GridMismatch,
         "field size does not match its grid");
  ensure(boundary_data.empty() || boundary_data.size() == g.boundary_count(),
         ErrorKind::GridMismatch, "boundary table size does not match the grid");
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  GridField out(u.grid);
  for (std::size_t k = 0; k < g.interior_count(); ++k) {
    const auto nb = g.neighbors(k);
    double sum = 0.0;
    for (int d = 0; d < 4; ++d) {
      if (nb[d] >= 0) {
        sum += u.values[nb[d]];
      } else if (!boundary_data.empty()) {
        sum += boundary_data[-nb[d] - 1];
      }
    }
    out.values[k] = (4.0 * u.values[k] - sum) * inv_h2;
  }
  return out;
}

int default_max_cg_iterations(std::size_t unknowns) {
  return 20 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(unknowns))));
}

LinearSolve solve_spd(const DiscreteLaplacian& op, const GridField& rhs, double tol,
                      const GridField* initial_guess, int max_iterations) {
  ensure(tol > 0.0, ErrorKind::InvalidArgument, "linear tolerance must be > 0");
  ensure(rhs.grid == op.grid() || rhs.grid.get() == op.grid().get(), ErrorKind::GridMismatch,
         "right-hand side lives on a different grid");
  const std::size_t n = op.size();
  if (max_iterations <= 0) max_iterations = default_max_cg_iterations(n);

  LinearSolve result{GridField(op.grid()), LinearSolveReport{0, 0.0, tol}};
  std::vector<double>& x = result.solution.values;
  const double bnorm = std::sqrt(dot(rhs.values, rhs.values));
  if (bnorm == 0.0) return result;

  std::vector<double> r(n), z(n), d(n), q(n), inv_diag(n);
  for (std::size_t k = 0; k < n; ++k) inv_diag[k] = 1.0 / op.diagonal(k);

  if (initial_guess) {
    ensure(initial_guess->values.size() == n, ErrorKind::GridMismatch, "initial guess size");
    x = initial_guess->values;
    op.apply(x, q);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs.values[k] - q[k];
  } else {
    r = rhs.values;
  }
  for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag[k] * r[k];
  d = z;
  double rz = dot(r, z);
  double rnorm = std::sqrt(dot(r, r));

  int it = 0;
  while (rnorm > tol * bnorm && it < max_iterations) {
    op.apply(d, q);
    const double alpha = rz / dot(d, q);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * d[k];
      r[k] -= alpha * q[k];
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag[k] * r[k];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n; ++k) d[k] = z[k] + beta * d[k];
    rnorm = std::sqrt(dot(r, r));
    ++it;
  }
  result.report.iterations = it;
  result.report.residual_norm = rnorm / bnorm;
  if (rnorm > tol * bnorm) {
    throw Error(ErrorKind::NoConvergence,
                "CG stopped after " + std::to_string(it) + " iterations at relative residual " +
                    format_real(rnorm / bnorm));
  }
  return result;
}

namespace {

GridField boundary_rhs(const GridPtr& grid, std::span<const double> boundary_data) {
  ensure(boundary_data.size() == grid->boundary_count(), ErrorKind::GridMismatch,
         "boundary table size does not match the grid");
  for (double v : boundary_data) {
    ensure(std::isfinite(v), ErrorKind::InvalidArgument, "boundary data must be finite");
  }
  const double inv_h2 = 1.0 / (grid->spacing() * grid->spacing());
  GridField rhs(grid);
  for (std::size_t k = 0; k < grid->interior_count(); ++k) {
    const auto nb = grid->neighbors(k);
    for (int d = 0; d < 4; ++d) {
      if (nb[d] < 0) rhs.values[k] += boundary_data[-nb[d] - 1] * inv_h2;
    }
  }
  return rhs;
}

}  // namespace

GridField solve_laplace(const GridPtr& grid, std::span<const double> boundary_data, double tol) {
  const GridField rhs = boundary_rhs(grid, boundary_data);
  // Start from the mean boundary value; constants are harmonic.
  double mean = 0.0;
  for (double v : boundary_data) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(1, boundary_data.size()));
  GridField guess(grid, mean);

  DiscreteLaplacian op(grid);
  LinearSolve solve = solve_spd(op, rhs, tol, &guess);
  solve.solution.boundary.assign(boundary_data.begin(), boundary_data.end());
  return std::move(solve.solution);
}

struct LaplaceFactorization::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

LaplaceFactorization::LaplaceFactorization(GridPtr grid)
    : grid_(std::move(grid)), impl_(std::make_unique<Impl>()) {
  const auto n = static_cast<Eigen::Index>(grid_->interior_count());
  const double inv_h2 = 1.0 / (grid_->spacing() * grid_->spacing());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    entries.emplace_back(k, k, 4.0 * inv_h2);
    for (int nb : grid_->neighbors(static_cast<std::size_t>(k))) {
      if (nb >= 0) entries.emplace_back(k, nb, -inv_h2);
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  impl_->ldlt.compute(a);
  ensure(impl_->ldlt.info() == Eigen::Success, ErrorKind::NoConvergence,
         "sparse factorisation of the Laplacian failed");
}

LaplaceFactorization::~LaplaceFactorization() = default;

GridField LaplaceFactorization::solve(const GridField& rhs) const {
  ensure(rhs.values.size() == grid_->interior_count(), ErrorKind::GridMismatch,
         "right-hand side lives on a different grid");
  const Eigen::Map<const Eigen::VectorXd> b(rhs.values.data(),
                                            static_cast<Eigen::Index>(rhs.values.size()));
  const Eigen::VectorXd x = impl_->ldlt.solve(b);
  GridField out(grid_);
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = x[static_cast<Eigen::Index>(k)];
  return out;
}

void LaplaceFactorization::solve(std::span<const double> rhs, std::span<double> x) const {
  ensure(rhs.size() == grid_->interior_count() && x.size() == rhs.size(), ErrorKind::GridMismatch,
         "vector size does not match the grid");
  const auto n = static_cast<Eigen::Index>(rhs.size());
  Eigen::Map<Eigen::VectorXd>(x.data(), n) =
      impl_->ldlt.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), n));
}

GridField LaplaceFactorization::solve_laplace(std::span<const double> boundary_data) const {
  GridField out = solve(boundary_rhs(grid_, boundary_data));
  out.boundary.assign(boundary_data.begin(), boundary_data.end());
  return out;
}

}  // namespace lelab
