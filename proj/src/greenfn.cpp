#include "lelab/greenfn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "lelab/error.hpp"
#include "lelab/format.hpp"

namespace lelab {

namespace {

constexpr double kInv2Pi = 0.5 / std::numbers::pi;

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  return 0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                (3.0 * (p1 - p2) + p3 - p0) * t * t * t);
}

std::string describe_point(Point x) {
  return "(" + format_real(x.x) + ", " + format_real(x.y) + ")";
}

}  // namespace

double log_kernel(Point x, Point y) { return -kInv2Pi * std::log(distance(x, y)); }

double GreenData::value(Point z) const { return log_kernel(source, z) + sample_bicubic(H, z); }

bool GreenData::masked(int interior_index) const { return std::isnan(G.values[interior_index]); }

GreenSolver::GreenSolver(GridPtr grid)
    : grid_(std::move(grid)), factor_(std::make_shared<LaplaceFactorization>(grid_)) {}

GreenData GreenSolver::solve(Point x) const {
  const Grid& g = *grid_;
  const double h = g.spacing();
  if (!g.domain().contains(x) || g.domain().distance_to_boundary(x) < 2.0 * h) {
    throw Error(ErrorKind::SourceTooCloseToBoundary,
                "source " + describe_point(x) + " is closer than 2h to the boundary");
  }
  std::vector<double> data(g.boundary_count());
  for (std::size_t b = 0; b < data.size(); ++b) {
    data[b] = -log_kernel(x, g.node_point(g.boundary_nodes()[b]));
  }
  GreenData out;
  out.source = x;
  out.H = factor_->solve_laplace(data);
  out.G = GridField(grid_);
  for (std::size_t k = 0; k < g.interior_count(); ++k) {
    const Point y = g.node_point(g.interior_nodes()[k]);
    const bool near = std::max(std::abs(y.x - x.x), std::abs(y.y - x.y)) < h;
    out.G.values[k] = near ? std::numeric_limits<double>::quiet_NaN()
                           : log_kernel(x, y) + out.H.values[k];
  }
  out.robin = sample_bicubic(out.H, x);
  return out;
}

GreenData green(const GridPtr& grid, Point x) { return GreenSolver(grid).solve(x); }

RobinMap::RobinMap(std::shared_ptr<const GreenSolver> solver, double probe_spacing)
    : solver_(std::move(solver)), spacing_(probe_spacing) {
  const Grid& g = *solver_->grid();
  ensure(probe_spacing >= 2.0 * g.spacing() * (1.0 - 1e-12), ErrorKind::InvalidArgument,
         "probe spacing must be at least 2h");
  const DomainSpec& d = g.domain();
  center_ = d.center();
  nx_ = static_cast<int>(std::floor((d.upper_corner().x - center_.x) / spacing_ + 1e-9));
  ny_ = static_cast<int>(std::floor((d.upper_corner().y - center_.y) / spacing_ + 1e-9));
  const std::size_t n = static_cast<std::size_t>(2 * nx_ + 1) * (2 * ny_ + 1);
  values_.assign(n, 0.0);
  done_.assign(n, 0);
}

std::size_t RobinMap::slot(int a, int b) const {
  return static_cast<std::size_t>((b + ny_) * (2 * nx_ + 1) + (a + nx_));
}

Point RobinMap::probe_point(int a, int b) const {
  return {center_.x + a * spacing_, center_.y + b * spacing_};
}

bool RobinMap::probe_valid(int a, int b) const {
  if (!in_range(a, b)) return false;
  const Point x = probe_point(a, b);
  const DomainSpec& d = solver_->grid()->domain();
  return d.contains(x) && d.distance_to_boundary(x) >= 2.0 * solver_->grid()->spacing();
}

double RobinMap::probe_value(int a, int b) const {
  ensure(probe_valid(a, b), ErrorKind::OutOfDomain, "probe outside the admissible region");
  const std::size_t s = slot(a, b);
  if (!done_[s]) {
    values_[s] = solver_->solve(probe_point(a, b)).robin;
    done_[s] = 1;
    ++solves_;
  }
  return values_[s];
}

double RobinMap::operator()(Point x) const {
  const double ux = (x.x - center_.x) / spacing_;
  const double uy = (x.y - center_.y) / spacing_;
  const int a0 = static_cast<int>(std::floor(ux));
  const int b0 = static_cast<int>(std::floor(uy));
  bool complete = true;
  for (int b = b0 - 1; b <= b0 + 2 && complete; ++b) {
    for (int a = a0 - 1; a <= a0 + 2 && complete; ++a) complete = probe_valid(a, b);
  }
  if (!complete) {
    ++solves_;
    return solver_->solve(x).robin;
  }
  const double tx = ux - a0, ty = uy - b0;
  double rows[4];
  for (int r = 0; r < 4; ++r) {
    const int b = b0 - 1 + r;
    rows[r] = catmull_rom(probe_value(a0 - 1, b), probe_value(a0, b), probe_value(a0 + 1, b),
                          probe_value(a0 + 2, b), tx);
  }
  return catmull_rom(rows[0], rows[1], rows[2], rows[3], ty);
}

void RobinMap::compute_all(int jobs) const {
  std::vector<std::pair<int, int>> todo;
  for (int b = -ny_; b <= ny_; ++b) {
    for (int a = -nx_; a <= nx_; ++a) {
      if (probe_valid(a, b) && !done_[slot(a, b)]) todo.emplace_back(a, b);
    }
  }
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)),
                                                      1, std::max<std::size_t>(todo.size(), 1));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < todo.size(); i += workers) {
        const auto [a, b] = todo[i];
        values_[slot(a, b)] = solver_->solve(probe_point(a, b)).robin;
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& [a, b] : todo) done_[slot(a, b)] = 1;
  solves_ += static_cast<int>(todo.size());
}

std::vector<RobinMap::Row> RobinMap::table() const {
  std::vector<Row> out;
  for (int b = -ny_; b <= ny_; ++b) {
    for (int a = -nx_; a <= nx_; ++a) {
      if (probe_valid(a, b)) out.push_back({probe_point(a, b), probe_value(a, b)});
    }
  }
  return out;
}

Point RobinMap::climb_from(Point start) const {
  int a = static_cast<int>(std::lround((start.x - center_.x) / spacing_));
  int b = static_cast<int>(std::lround((start.y - center_.y) / spacing_));
  if (!probe_valid(a, b)) {
    double best = std::numeric_limits<double>::infinity();
    for (int bb = -ny_; bb <= ny_; ++bb) {
      for (int aa = -nx_; aa <= nx_; ++aa) {
        const double d = distance(probe_point(aa, bb), start);
        if (probe_valid(aa, bb) && d < best) {
          best = d;
          a = aa;
          b = bb;
        }
      }
    }
    ensure(std::isfinite(best), ErrorKind::OutOfDomain, "no admissible Robin probe");
  }
  while (true) {
    double best = probe_value(a, b);
    int na = a, nb = b;
    for (int db = -1; db <= 1; ++db) {
      for (int da = -1; da <= 1; ++da) {
        if ((da == 0 && db == 0) || !probe_valid(a + da, b + db)) continue;
        const double v = probe_value(a + da, b + db);
        if (v > best) {
          best = v;
          na = a + da;
          nb = b + db;
        }
      }
    }
    if (na == a && nb == b) return probe_point(a, b);
    a = na;
    b = nb;
  }
}

KRProblem::KRProblem(std::shared_ptr<const GreenSolver> solver, double probe_spacing,
                     double fd_step)
    : solver_(solver), robin_(solver, probe_spacing), fd_step_(fd_step) {
  ensure(fd_step >= 2.0 * solver_->grid()->spacing() * (1.0 - 1e-12), ErrorKind::InvalidArgument,
         "fd_step must be at least 2h");
}

const GreenData& KRProblem::green_at(Point x) {
  const auto key = std::make_pair(x.x, x.y);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  if (cache_.size() >= 32) cache_.clear();
  return cache_.emplace(key, solver_->solve(x)).first->second;
}

bool KRProblem::admissible(std::span<const Point> points) const {
  const double margin = 2.0 * solver_->grid()->spacing() + fd_step_;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!domain().contains(points[i]) || domain().distance_to_boundary(points[i]) < margin) {
      return false;
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (distance(points[i], points[j]) < 4.0 * fd_step_) return false;
    }
  }
  return true;
}

KRConfiguration KRProblem::evaluate(std::span<const Point> points) {
  const std::size_t n = points.size();
  ensure(n >= 1, ErrorKind::InvalidArgument, "configuration needs at least one point");
  const double margin = 2.0 * solver_->grid()->spacing() + fd_step_;
  for (std::size_t i = 0; i < n; ++i) {
    if (!domain().contains(points[i]) || domain().distance_to_boundary(points[i]) < margin) {
      throw Error(ErrorKind::SourceTooCloseToBoundary,
                  "configuration point " + describe_point(points[i]) +
                      " is closer than 2h + fd_step to the boundary");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (distance(points[i], points[j]) < 4.0 * fd_step_) {
        throw Error(ErrorKind::PointsTooClose, "points " + describe_point(points[i]) + " and " +
                                                   describe_point(points[j]) +
                                                   " are closer than 4 fd_step");
      }
    }
  }
  const double d = fd_step_;
  const Point ex{d, 0.0}, ey{0.0, d};

  KRConfiguration cfg;
  cfg.points.assign(points.begin(), points.end());
  // Phi_j at x_j, x_j +- d e_x, x_j +- d e_y.
  std::vector<std::array<double, 5>> phi(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Point x = points[j];
    phi[j] = {robin_(x), robin_(x + ex), robin_(x - ex), robin_(x + ey), robin_(x - ey)};
  }
  for (std::size_t i = 0; i < n; ++i) {
    const GreenData& gi = green_at(points[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Point x = points[j];
      const std::array<double, 5> add{gi.value(x), gi.value(x + ex), gi.value(x - ex),
                                      gi.value(x + ey), gi.value(x - ey)};
      for (int k = 0; k < 5; ++k) phi[j][k] += add[k];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    cfg.value += phi[j][0];
    const Point g{(phi[j][1] - phi[j][2]) / (2.0 * d), (phi[j][3] - phi[j][4]) / (2.0 * d)};
    cfg.gradients.push_back(g);
    cfg.grad_norm = std::max(cfg.grad_norm, norm(g));
  }
  return cfg;
}

KRConfiguration kr_gradient(KRProblem& problem, std::span<const Point> points) {
  return problem.evaluate(points);
}

namespace {

double squared_gradient(const KRConfiguration& cfg) {
  double s = 0.0;
  for (const Point& g : cfg.gradients) s += g.x * g.x + g.y * g.y;
  return s;
}

Eigen::VectorXd flatten_gradient(const KRConfiguration& cfg) {
  Eigen::VectorXd v(2 * static_cast<Eigen::Index>(cfg.gradients.size()));
  for (std::size_t j = 0; j < cfg.gradients.size(); ++j) {
    v[2 * j] = cfg.gradients[j].x;
    v[2 * j + 1] = cfg.gradients[j].y;
  }
  return v;
}

void shift(std::vector<Point>& pts, const Eigen::VectorXd& step, double scale) {
  for (std::size_t j = 0; j < pts.size(); ++j) {
    pts[j].x += scale * step[2 * j];
    pts[j].y += scale * step[2 * j + 1];
  }
}

}  // namespace

KRResult kr_stationary(KRProblem& problem, int n, const std::vector<std::vector<Point>>& starts,
                       double kr_tol, int max_iterations) {
  ensure(n >= 1, ErrorKind::InvalidArgument, "kr_stationary needs n >= 1");
  ensure(!starts.empty(), ErrorKind::InvalidArgument, "kr_stationary needs at least one start");
  const double eps = problem.fd_step();
  const double max_move = 0.25 * problem.domain().diameter();

  KRResult result;
  result.best.grad_norm = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    ensure(static_cast<int>(start.size()) == n, ErrorKind::InvalidArgument,
           "start configuration has the wrong number of points");
    if (!problem.admissible(start)) continue;
    ++result.starts_tried;
    std::vector<Point> x = start;
    KRConfiguration cfg = problem.evaluate(x);
    double f = squared_gradient(cfg);
    double lambda = 1e-3;
    for (int it = 0; it < max_iterations && cfg.grad_norm > 0.25 * kr_tol; ++it) {
      ++result.iterations;
      const Eigen::VectorXd g = flatten_gradient(cfg);
      const Eigen::Index m = g.size();
      Eigen::MatrixXd J(m, m);
      for (Eigen::Index k = 0; k < m; ++k) {
        std::vector<Point> xp = x;
        double e = eps;
        auto& coord = (k % 2 == 0) ? xp[k / 2].x : xp[k / 2].y;
        coord += e;
        if (!problem.admissible(xp)) {
          coord -= 2.0 * e;
          e = -e;
        }
        J.col(k) = (flatten_gradient(problem.evaluate(xp)) - g) / e;
      }
      const Eigen::MatrixXd JtJ = J.transpose() * J;
      const Eigen::VectorXd rhs = -J.transpose() * g;
      bool accepted = false;
      for (int tries = 0; tries < 8 && !accepted; ++tries) {
        Eigen::MatrixXd M = JtJ;
        M.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
        Eigen::VectorXd step = M.ldlt().solve(rhs);
        const double len = step.norm();
        if (!std::isfinite(len)) {
          lambda *= 4.0;
          continue;
        }
        if (len > max_move) step *= max_move / len;
        std::vector<Point> xt = x;
        shift(xt, step, 1.0);
        if (problem.admissible(xt)) {
          KRConfiguration trial = problem.evaluate(xt);
          const double ft = squared_gradient(trial);
          if (ft < f) {
            x = std::move(xt);
            cfg = std::move(trial);
            f = ft;
            lambda = std::max(lambda / 3.0, 1e-9);
            accepted = true;
            break;
          }
        }
        lambda *= 4.0;
      }
      if (!accepted) break;
    }
    if (cfg.grad_norm < result.best.grad_norm) result.best = cfg;
  }
  ensure(result.starts_tried > 0, ErrorKind::InvalidArgument, "no admissible start configuration");
  result.converged = result.best.grad_norm <= kr_tol;
  return result;
}

std::vector<std::vector<Point>> kr_default_starts(const KRProblem& problem, int n,
                                                  int random_starts, std::uint64_t seed) {
  ensure(n >= 1, ErrorKind::InvalidArgument, "n must be >= 1");
  const DomainSpec& d = problem.domain();
  std::vector<std::vector<Point>> starts;
  if (n == 1) {
    const Point seed_point =
        d.kind() == DomainSpec::Kind::Annulus ? Point{d.medial_radius(), 0.0} : d.center();
    starts.push_back({problem.robin().climb_from(seed_point)});
    return starts;
  }
  std::vector<Point> symmetric;
  if (d.kind() == DomainSpec::Kind::Rectangle) {
    for (int k = 0; k < n; ++k) {
      symmetric.push_back({d.width() * (k + 1) / (n + 1), d.center().y});
    }
  } else {
    for (int k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / n;
      symmetric.push_back({d.medial_radius() * std::cos(theta), d.medial_radius() * std::sin(theta)});
    }
  }
  starts.push_back(std::move(symmetric));

  std::mt19937_64 rng(seed);
  // 53 random bits to [0,1); avoids the implementation-defined real distributions.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const Point lo = d.lower_corner(), hi = d.upper_corner();
  for (int s = 0; s < random_starts; ++s) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      std::vector<Point> cand;
      for (int k = 0; k < n; ++k) {
        const double ux = unit();
        const double uy = unit();
        cand.push_back({lo.x + ux * (hi.x - lo.x), lo.y + uy * (hi.y - lo.y)});
      }
      if (problem.admissible(cand)) {
        starts.push_back(std::move(cand));
        break;
      }
    }
  }
  return starts;
}

std::vector<ConvLocRow> convloc_check(const SolutionRecord& record, std::span<const Point> peaks,
                                      std::span<const Point> test_points, const GreenSolver& solver,
                                      double delta) {
  const Grid& g = *record.u.grid;
  ensure(delta >= 5.0 * g.spacing() * (1.0 - 1e-12), ErrorKind::InvalidArgument,
         "delta must be at least 5h");
  ensure(!peaks.empty(), ErrorKind::InvalidArgument, "convloc_check needs at least one peak");
  for (const Point& y : test_points) {
    bool ok = g.domain().contains(y) && g.domain().distance_to_boundary(y) >= delta;
    for (const Point& x : peaks) ok = ok && distance(x, y) >= delta;
    if (!ok) {
      throw Error(ErrorKind::TestPointTooClose,
                  "test point " + describe_point(y) + " is closer than delta to a peak or the boundary");
    }
  }
  std::vector<GreenData> greens;
  for (const Point& x : peaks) greens.push_back(solver.solve(x));
  const double weight = 8.0 * std::numbers::pi * std::sqrt(std::exp(1.0));
  std::vector<ConvLocRow> rows;
  for (const Point& y : test_points) {
    double sum = 0.0;
    for (const GreenData& gd : greens) sum += gd.value(y);
    ConvLocRow row;
    row.y = y;
    row.pu = record.p * sample_bilinear(record.u, y);
    row.green_sum = weight * sum;
    row.rel_error = sum >= 0.01 ? std::abs(row.pu - row.green_sum) / row.green_sum
                                : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lelab
