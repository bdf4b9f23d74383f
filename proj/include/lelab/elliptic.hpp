#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lelab/geometry.hpp"

namespace lelab {

/// Five-point positive Laplacian (4u - uE - uW - uN - uS)/h^2 on the interior
/// unknowns, optionally shifted by a nonnegative diagonal. Missing neighbours
/// contribute zero, so the operator acts on fields with homogeneous Dirichlet
/// data; inhomogeneous data enters through the right-hand side.
class DiscreteLaplacian {
 public:
  explicit DiscreteLaplacian(GridPtr grid);
  DiscreteLaplacian(GridPtr grid, std::vector<double> shift);

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return grid_->interior_count(); }
  double diagonal(std::size_t k) const;

  void apply(std::span<const double> x, std::span<double> y) const;

 private:
  GridPtr grid_;
  std::vector<double> shift_;
  double inv_h2_;
};

/// Stencil applied at every interior node; boundary values come from
/// boundary_data when given, else from the field's attached table, else 0.
GridField apply_laplacian(const GridField& u);
GridField apply_laplacian(const GridField& u, std::span<const double> boundary_data);

struct LinearSolveReport {
  int iterations = 0;
  double residual_norm = 0.0;  // ||b - Ax|| / ||b||
  double tolerance = 0.0;
};

struct LinearSolve {
  GridField solution;
  LinearSolveReport report;
};

inline constexpr double kDefaultLinearTol = 1e-10;

/// 20 * sqrt(number of unknowns).
int default_max_cg_iterations(std::size_t unknowns);

/// Jacobi-preconditioned conjugate gradients. Throws NoConvergence when the
/// relative residual has not reached tol after max_iterations (0 = default).
LinearSolve solve_spd(const DiscreteLaplacian& op, const GridField& rhs,
                      double tol = kDefaultLinearTol, const GridField* initial_guess = nullptr,
                      int max_iterations = 0);

/// Discrete harmonic extension of boundary_data (one value per boundary node).
/// The returned field carries the data as its boundary table.
GridField solve_laplace(const GridPtr& grid, std::span<const double> boundary_data,
                        double tol = kDefaultLinearTol);

/// Sparse Cholesky factorisation of the five-point matrix, for repeated
/// solves on one grid (Green's functions for many sources).
class LaplaceFactorization {
 public:
  explicit LaplaceFactorization(GridPtr grid);
  ~LaplaceFactorization();
  LaplaceFactorization(const LaplaceFactorization&) = delete;
  LaplaceFactorization& operator=(const LaplaceFactorization&) = delete;

  const GridPtr& grid() const { return grid_; }
  /// Solves A x = rhs. Safe to call concurrently.
  GridField solve(const GridField& rhs) const;
  void solve(std::span<const double> rhs, std::span<double> x) const;
  /// Same contract as the free solve_laplace.
  GridField solve_laplace(std::span<const double> boundary_data) const;

 private:
  struct Impl;
  GridPtr grid_;
  std::unique_ptr<Impl> impl_;
};

/// Euclidean inner product of interior values.
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace lelab
