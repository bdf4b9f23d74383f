#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lelab/greenfn.hpp"
#include "lelab/radial_oracle.hpp"
#include "test_support.hpp"

using namespace lelab;

namespace {

const double kTwoPi = 2 * std::numbers::pi;

// Method of images on the unit disk.
double disk_robin(Point x) { return std::log(1 - x.x * x.x - x.y * x.y) / kTwoPi; }

std::shared_ptr<const GreenSolver> disk_solver(double h) {
  return std::make_shared<const GreenSolver>(build_grid(DomainSpec::disk(1), h));
}

}  // namespace

TEST_CASE("decomposition, harmonic regular part and positivity") {
  auto solver = disk_solver(1.0 / 64);
  const GreenData d = solver->solve({0.3, -0.2});
  const Grid& g = *solver->grid();
  auto lap = apply_laplacian(d.H);
  double max_h = 0.0;
  for (double v : d.H.values) max_h = std::max(max_h, std::abs(v));
  std::size_t masked = 0;
  for (std::size_t k = 0; k < g.interior_count(); ++k) {
    CHECK(std::abs(lap.values[k]) <= 1e-6 * max_h * 64 * 64);
    if (d.masked(static_cast<int>(k))) {
      CHECK(std::isnan(d.G.values[k]));
      ++masked;
      continue;
    }
    const Point y = g.node_point(g.interior_nodes()[k]);
    CHECK(d.G.values[k] == doctest::Approx(log_kernel(d.source, y) + d.H.values[k]).epsilon(1e-12));
    CHECK(d.G.values[k] >= -1e-9);
  }
  CHECK(masked >= 1);
  CHECK(masked <= 9);
}

TEST_CASE("disk centre source against images") {
  auto solver = disk_solver(1.0 / 128);
  const GreenData d = solver->solve({0, 0});
  CHECK(std::abs(d.robin) <= 1e-2);
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (double th : {0.0, 0.7, 2.0}) {
      const Point y{r * std::cos(th), r * std::sin(th)};
      CHECK(std::abs(d.value(y) - std::log(1 / r) / kTwoPi) <= 1e-2);
    }
  }
}

TEST_CASE("robin off centre and reciprocity") {
  auto solver = disk_solver(1.0 / 128);
  const Point x{0.5, 0}, y{-0.2, 0.4};
  const GreenData dx = solver->solve(x), dy = solver->solve(y);
  CHECK(std::abs(dx.robin - disk_robin(x)) <= 1e-2);
  CHECK(std::abs(dx.value(y) - dy.value(x)) <= 2e-2);
  CHECK(error_kind([&] { solver->solve({0.995, 0}); }) == ErrorKind::SourceTooCloseToBoundary);
  CHECK(error_kind([&] { solver->solve({2, 0}); }) == ErrorKind::SourceTooCloseToBoundary);
}

TEST_CASE("robin map") {
  auto solver = disk_solver(1.0 / 128);
  RobinMap map(solver, 1.0 / 16);
  CHECK(std::abs(map({0.3, 0}) - disk_robin({0.3, 0})) <= 1e-2);
  CHECK(std::abs(map({0.1, 0.25}) - disk_robin({0.1, 0.25})) <= 1e-2);
  CHECK(error_kind([&] { RobinMap(solver, 1.0 / 256); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("rectangle robin peaks at the centre probe") {
  auto solver = std::make_shared<const GreenSolver>(build_grid(DomainSpec::rectangle(1, 1), 1.0 / 64));
  RobinMap map(solver, 1.0 / 8);
  map.compute_all(2);
  const auto table = map.table();
  REQUIRE(!table.empty());
  auto best = table.front();
  for (const auto& row : table) {
    if (row.robin > best.robin) best = row;
  }
  CHECK(best.x.x == doctest::Approx(0.5));
  CHECK(best.x.y == doctest::Approx(0.5));
  const Point top = map.climb_from({0.2, 0.7});
  CHECK(top.x == doctest::Approx(0.5));
  CHECK(top.y == doctest::Approx(0.5));
}

TEST_CASE("annulus robin is rotationally invariant") {
  auto solver =
      std::make_shared<const GreenSolver>(build_grid(DomainSpec::annulus(0.5, 1), 1.0 / 64));
  RobinMap map(solver, 1.0 / 16);
  // probes on the circle of radius 10/16: (10,0), (0,10), (6,8), (8,-6), ...
  const double a = map.probe_value(10, 0);
  CHECK(std::abs(map.probe_value(0, 10) - a) <= 1e-2);
  CHECK(std::abs(map.probe_value(-10, 0) - a) <= 1e-2);
  CHECK(std::abs(map.probe_value(6, 8) - a) <= 1e-2);
  CHECK(std::abs(map.probe_value(8, -6) - a) <= 1e-2);
  CHECK(std::abs(map.probe_value(9, -12) - map.probe_value(12, 9)) <= 1e-2);
}

TEST_CASE("configuration gradients") {
  auto solver = disk_solver(1.0 / 128);
  KRProblem problem(solver, 1.0 / 16, 4.0 / 128);
  const Point centre[] = {{0, 0}};
  CHECK(kr_gradient(problem, centre).grad_norm <= 1e-6);
  const Point off[] = {{0.3, 0}};
  const KRConfiguration c = kr_gradient(problem, off);
  CHECK(c.gradients[0].x < 0.0);
  CHECK(std::abs(c.gradients[0].y) <= 1e-6);
  // d/dr (1/2pi) log(1 - r^2) = -r/(pi(1 - r^2)), halved for the Robin gradient convention
  CHECK(c.gradients[0].x == doctest::Approx(-0.3 / (std::numbers::pi * 0.91)).epsilon(0.05));

  const Point bad[] = {{0.99, 0}};
  CHECK(error_kind([&] { kr_gradient(problem, bad); }) == ErrorKind::SourceTooCloseToBoundary);
  const Point close[] = {{0.1, 0}, {0.11, 0}};
  CHECK(error_kind([&] { kr_gradient(problem, close); }) == ErrorKind::PointsTooClose);
}

TEST_CASE("antipodal pair on the annulus has no angular gradient") {
  auto solver =
      std::make_shared<const GreenSolver>(build_grid(DomainSpec::annulus(0.5, 1), 1.0 / 64));
  KRProblem problem(solver, 1.0 / 16, 4.0 / 64);
  const Point pair[] = {{0.75, 0}, {-0.75, 0}};
  const KRConfiguration c = kr_gradient(problem, pair);
  CHECK(std::abs(c.gradients[0].y) <= 1e-3);
  CHECK(std::abs(c.gradients[1].y) <= 1e-3);
  CHECK(c.gradients[0].x == doctest::Approx(-c.gradients[1].x).epsilon(1e-3));
}

TEST_CASE("stationary points") {
  SUBCASE("disk") {
    auto solver = disk_solver(1.0 / 128);
    KRProblem problem(solver, 1.0 / 16, 4.0 / 128);
    const KRResult r = kr_stationary(problem, 1, {{{0.4, 0.2}}, {{-0.3, -0.5}}});
    CHECK(r.converged);
    CHECK(norm(r.best.points[0]) <= 2.0 / 128);
  }
  SUBCASE("rectangle") {
    auto solver =
        std::make_shared<const GreenSolver>(build_grid(DomainSpec::rectangle(1, 1), 1.0 / 64));
    KRProblem problem(solver, 1.0 / 16, 4.0 / 64);
    const KRResult r = kr_stationary(problem, 1, kr_default_starts(problem, 1, 0, 1));
    CHECK(r.converged);
    CHECK(distance(r.best.points[0], {0.5, 0.5}) <= 2.0 / 64);
  }
  SUBCASE("annulus pair") {
    auto solver =
        std::make_shared<const GreenSolver>(build_grid(DomainSpec::annulus(0.5, 1), 1.0 / 64));
    KRProblem problem(solver, 1.0 / 16, 4.0 / 64);
    const KRResult r = kr_stationary(problem, 2, kr_default_starts(problem, 2, 1, 7));
    REQUIRE(r.best.points.size() == 2);
    CHECK(r.converged);
    CHECK(norm(r.best.points[0] + r.best.points[1]) <= 2.0 / 64);
    CHECK(std::abs(norm(r.best.points[0]) - norm(r.best.points[1])) <= 2.0 / 64);
  }
}

TEST_CASE("default starts are seeded") {
  auto solver =
      std::make_shared<const GreenSolver>(build_grid(DomainSpec::annulus(0.5, 1), 1.0 / 32));
  KRProblem problem(solver, 1.0 / 8, 4.0 / 32);
  const auto a = kr_default_starts(problem, 2, 3, 42);
  const auto b = kr_default_starts(problem, 2, 3, 42);
  const auto c = kr_default_starts(problem, 2, 3, 43);
  REQUIRE(a.size() == 4);
  CHECK(a == b);
  CHECK(a != c);
  for (const auto& cfg : a) {
    for (Point x : cfg) CHECK(problem.domain().contains(x));
  }
}

TEST_CASE("far field of the oracle bubble") {
  auto g = build_grid(DomainSpec::disk(1), 1.0 / 128);
  GreenSolver solver(g);
  const Point peaks[] = {{0, 0}};
  const Point ys[] = {{0.5, 0}, {0, 0.95}};
  const auto r50 = convloc_check(oracle_record(shoot(50), g), peaks, ys, solver, 5.0 / 128);
  const auto r200 = convloc_check(oracle_record(shoot(200), g), peaks, ys, solver, 5.0 / 128);
  REQUIRE(r200.size() == 2);
  CHECK(r200[0].rel_error <= 0.1);
  CHECK(r200[0].rel_error < r50[0].rel_error);
  CHECK(std::isnan(r200[1].rel_error));
  const Point near_peak[] = {{0.02, 0}};
  CHECK(error_kind([&] {
          convloc_check(oracle_record(shoot(50), g), peaks, near_peak, solver, 5.0 / 128);
        }) == ErrorKind::TestPointTooClose);
}
