#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "lelab/elliptic.hpp"
#include "lelab/geometry.hpp"
#include "lelab/lane_emden.hpp"

namespace lelab {

/// Dirichlet Green's function G_x = (1/2pi) log(1/|x - .|) + H_x with the
/// regular part H_x discrete-harmonic and G_x = 0 on boundary nodes.
struct GreenData {
  Point source;
  GridField G;  // NaN at nodes within one cell of the source
  GridField H;  // carries its boundary table
  double robin = 0.0;

  /// G_x(z) from the decomposition, with H sampled bicubically.
  double value(Point z) const;
  bool masked(int interior_index) const;
};

double log_kernel(Point x, Point y);  // (1/2pi) log(1/|x - y|)

/// One factorisation per grid, reused for every source.
class GreenSolver {
 public:
  explicit GreenSolver(GridPtr grid);

  const GridPtr& grid() const { return grid_; }
  GreenData solve(Point x) const;

 private:
  GridPtr grid_;
  std::shared_ptr<const LaplaceFactorization> factor_;
};

/// Convenience wrapper that factorises for a single source.
GreenData green(const GridPtr& grid, Point x);

/// Robin function on a probe lattice anchored at the domain centre. Probes
/// are solved on first use (or all at once by compute_all) and interpolated
/// with Catmull-Rom bicubics; where the 4x4 probe stencil is incomplete the
/// value comes from a direct solve at the query point.
class RobinMap {
 public:
  RobinMap(std::shared_ptr<const GreenSolver> solver, double probe_spacing);

  double spacing() const { return spacing_; }
  int half_x() const { return nx_; }
  int half_y() const { return ny_; }
  Point probe_point(int a, int b) const;
  /// Probe is at least 2h from the boundary.
  bool probe_valid(int a, int b) const;
  double probe_value(int a, int b) const;

  double operator()(Point x) const;

  /// Solves every valid probe, using up to `jobs` threads.
  void compute_all(int jobs = 1) const;

  struct Row {
    Point x;
    double robin;
  };
  /// Valid probes in row-major order (computing any that are missing).
  std::vector<Row> table() const;

  /// Hill-climb over probes from the probe nearest `start` to a local maximiser.
  Point climb_from(Point start) const;

  int solves() const { return solves_; }
  const GreenSolver& solver() const { return *solver_; }

 private:
  std::size_t slot(int a, int b) const;
  bool in_range(int a, int b) const { return a >= -nx_ && a <= nx_ && b >= -ny_ && b <= ny_; }

  std::shared_ptr<const GreenSolver> solver_;
  double spacing_;
  Point center_;
  int nx_ = 0;
  int ny_ = 0;
  mutable std::vector<double> values_;
  mutable std::vector<unsigned char> done_;
  mutable int solves_ = 0;
};

struct KRConfiguration {
  std::vector<Point> points;
  double value = 0.0;  // sum_j H_{x_j}(x_j) + sum_{i != j} G_{x_i}(x_j)
  std::vector<Point> gradients;
  double grad_norm = 0.0;  // max_j |g_j|
};

/// Evaluates the configuration functional and its per-point gradients
/// g_j = grad_z [R(z) + sum_{i != j} G_{x_i}(z)] at z = x_j by central
/// differences of step fd_step. Green data are cached by source.
class KRProblem {
 public:
  KRProblem(std::shared_ptr<const GreenSolver> solver, double probe_spacing, double fd_step);

  double fd_step() const { return fd_step_; }
  const RobinMap& robin() const { return robin_; }
  const DomainSpec& domain() const { return solver_->grid()->domain(); }
  const GreenData& green_at(Point x);

  /// Points must be interior, at least 2h + fd_step from the boundary and at
  /// least 4 fd_step apart.
  bool admissible(std::span<const Point> points) const;
  KRConfiguration evaluate(std::span<const Point> points);

 private:
  std::shared_ptr<const GreenSolver> solver_;
  RobinMap robin_;
  double fd_step_;
  std::map<std::pair<double, double>, GreenData> cache_;
};

inline constexpr double kDefaultKrTol = 1e-3;

/// Alias of KRProblem::evaluate with the precondition checks of the contract.
KRConfiguration kr_gradient(KRProblem& problem, std::span<const Point> points);

struct KRResult {
  KRConfiguration best;
  bool converged = false;
  int starts_tried = 0;
  int iterations = 0;
};

/// Damped Gauss-Newton on |g|^2 from each start (finite-difference Jacobian,
/// backtracking). Returns the configuration with the smallest grad_norm.
KRResult kr_stationary(KRProblem& problem, int n, const std::vector<std::vector<Point>>& starts,
                       double kr_tol = kDefaultKrTol, int max_iterations = 40);

/// Starting configurations: for n = 1 the probe maximiser of the Robin
/// function; for n >= 2 equally spaced points on the medial circle (or the
/// centred horizontal segment for rectangles) plus random_starts uniform
/// interior draws from std::mt19937_64 seeded with `seed`.
std::vector<std::vector<Point>> kr_default_starts(const KRProblem& problem, int n,
                                                  int random_starts, std::uint64_t seed);

struct ConvLocRow {
  Point y;
  double pu = 0.0;         // p u(y)
  double green_sum = 0.0;  // 8 pi sqrt(e) sum_j G_{x_j}(y)
  double rel_error = 0.0;  // NaN where sum_j G_{x_j}(y) < 0.01
};

/// Compares p u with the limiting Green combination at test points at least
/// delta from every peak and from the boundary.
std::vector<ConvLocRow> convloc_check(const SolutionRecord& record, std::span<const Point> peaks,
                                      std::span<const Point> test_points, const GreenSolver& solver,
                                      double delta);

}  // namespace lelab
