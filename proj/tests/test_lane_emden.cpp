#include <doctest.h>

#include <cmath>

#include "lelab/elliptic.hpp"
#include "lelab/lane_emden.hpp"
#include "test_support.hpp"

using namespace lelab;

namespace {

SolveParams params_for(std::vector<double> targets, double p_start = 3.0) {
  SolveParams s;
  s.p_start = p_start;
  s.p_targets = std::move(targets);
  return s;
}

void check_record_invariants(const SolutionRecord& r) {
  CHECK(r.u.is_positive());
  CHECK(std::isfinite(r.energy));
  CHECK(r.newton.residual <= r.newton.tolerance);
  CHECK(equation_residual(r.u, r.p) <= r.newton.tolerance * (1 + 1e-9));
  CHECK(energy_identity_gap(r) <= 1e-10 * r.energy);
  CHECK(r.log_mu2 == doctest::Approx(std::log(8.0) - std::log(r.p) - (r.p - 1) * std::log(r.sup_norm)));
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK(error_kind([] { params_for({3}, 1.0).validate(); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { params_for({}).validate(); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { params_for({2}).validate(); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { params_for({10, 5}).validate(); }) == ErrorKind::InvalidArgument);
  CHECK_FALSE(error_kind([] { params_for({3, 10}).validate(); }));
}

TEST_CASE("degenerate schedule equals minimiser plus Newton") {
  auto g = build_grid(DomainSpec::disk(1), 1.0 / 32);
  auto recs = continue_in_p(g, params_for({3}));
  REQUIRE(recs.size() == 1);
  auto direct = newton_refine(solve_minimizer(g, 3.0), 3.0, params_for({3}));
  CHECK(recs[0].p == 3.0);
  CHECK(recs[0].sup_norm == doctest::Approx(direct.sup_norm).epsilon(1e-9));
  CHECK(recs[0].energy == doctest::Approx(direct.energy).epsilon(1e-9));
  check_record_invariants(recs[0]);
}

TEST_CASE("minimiser on the disk is radial at p=3") {
  auto g = build_grid(DomainSpec::disk(1), 1.0 / 64);
  auto u = solve_minimizer(g, 3.0);
  CHECK(u.is_positive());
  for (double r : {0.2, 0.4, 0.6}) {
    const double a = sample_bilinear(u, {r, 0.0});
    const double b = sample_bilinear(u, {r / std::sqrt(2.0), r / std::sqrt(2.0)});
    const double c = sample_bilinear(u, {-0.6 * r, 0.8 * r});
    CHECK(std::abs(a - b) <= 1e-3 * a + 2e-3 * a);  // lattice anisotropy is O(h^2)
    CHECK(std::abs(a - c) <= 3e-3 * a);
  }
  // Newton from the minimiser converges quickly and matches the radial value
  // u(0) = 3.5739009819 (shooting, frozen); the staircase boundary costs O(h).
  auto rec = newton_refine(u, 3.0, params_for({3}));
  CHECK(rec.newton.steps <= 3);
  CHECK(rec.sup_norm == doctest::Approx(3.57390098193).epsilon(1.5e-2));
}

TEST_CASE("rectangle minimiser peaks at the centre") {
  auto g = build_grid(DomainSpec::rectangle(1, 1), 1.0 / 32);
  auto rec = newton_refine(solve_minimizer(g, 3.0), 3.0, params_for({3}));
  CHECK(rec.peak.x == doctest::Approx(0.5));
  CHECK(rec.peak.y == doctest::Approx(0.5));
}

TEST_CASE("Newton fixed point") {
  auto g = build_grid(DomainSpec::disk(1), 1.0 / 32);
  auto first = newton_refine(solve_minimizer(g, 5.0), 5.0, params_for({5}));
  auto again = newton_refine(first.u, 5.0, params_for({5}));
  CHECK(again.newton.steps <= 1);
  CHECK(again.sup_norm == doctest::Approx(first.sup_norm).epsilon(1e-12));
}

TEST_CASE("tiny constant start is rejected") {
  auto g = build_grid(DomainSpec::disk(1), 1.0 / 32);
  GridField eps(g, 1e-6);
  const auto kind = error_kind([&] { newton_refine(eps, 5.0, params_for({5})); });
  REQUIRE(kind.has_value());
  CHECK((*kind == ErrorKind::NewtonDiverged || *kind == ErrorKind::NonPositive ||
         *kind == ErrorKind::JacobianSolveFailed));
  CHECK(error_kind([&] { newton_refine(GridField(g, 0.0), 5.0, params_for({5})); }) ==
        ErrorKind::NonPositive);
}

TEST_CASE("positive start required and grids must match") {
  auto g = build_grid(DomainSpec::disk(1), 1.0 / 16);
  auto other = build_grid(DomainSpec::disk(1), 1.0 / 16);
  LaplaceFactorization F(other);
  CHECK(error_kind([&] { solve_minimizer(g, 3.0, 1e-6, &F); }) == ErrorKind::GridMismatch);
  CHECK(error_kind([&] { solve_minimizer(g, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("disk continuation at resolved exponents") {
  // Past the fold near p = 15 the h = 1/128 branch stops resolving the bubble
  // (mu_p < 2h); the sup-norm band is checked where it is resolved.
  auto g = build_grid(DomainSpec::disk(1), 1.0 / 128);
  auto recs = continue_in_p(g, params_for({10, 20}));
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) {
    check_record_invariants(r);
    CHECK(r.sup_norm >= 1.4);
    CHECK(r.sup_norm <= 2.2);
    CHECK(norm(r.peak) < 1e-12);
  }
  // radial shooting: u0(10) = 1.85744727607, E(10) = 59.5249758717
  CHECK(recs[0].sup_norm == doctest::Approx(1.85744727607).epsilon(0.01));
  CHECK(recs[0].energy == doctest::Approx(59.5249758717).epsilon(0.01));
}

TEST_CASE("rectangle peak stays at the centre along the continuation") {
  auto g = build_grid(DomainSpec::rectangle(1, 1), 1.0 / 64);
  int seen = 0;
  auto recs = continue_in_p(g, params_for({10, 20, 50, 100, 200}), [&](const SolutionRecord& r) {
    ++seen;
    CHECK(r.peak.x == doctest::Approx(0.5));
    CHECK(r.peak.y == doctest::Approx(0.5));
    CHECK(energy_identity_gap(r) <= 1e-10 * r.energy);
  });
  CHECK(recs.size() == 5);
  CHECK(seen >= 5);
  for (const auto& r : recs) check_record_invariants(r);
}

TEST_CASE("annulus solutions are positive and satisfy the identities") {
  auto g = build_grid(DomainSpec::annulus(0.5, 1), 1.0 / 64);
  for (const auto& r : continue_in_p(g, params_for({5, 10}))) check_record_invariants(r);
}
