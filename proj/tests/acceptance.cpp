// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lelab/bubbles.hpp"
#include "lelab/elliptic.hpp"
#include "lelab/experiments.hpp"
#include "lelab/format.hpp"
#include "lelab/greenfn.hpp"
#include "lelab/radial_oracle.hpp"

using namespace lelab;
namespace fs = std::filesystem;

namespace {

const double kSqrtE = std::sqrt(std::numbers::e);
const double k8PiE = 8 * std::numbers::pi * std::numbers::e;
const double kTwoPi = 2 * std::numbers::pi;
constexpr double kH = 1.0 / 128;

int failures = 0;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

void report(int id, const char* name, bool pass, const std::string& detail, double seconds) {
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(), seconds);
  std::fflush(stdout);
}

void info(const std::string& line) {
  std::printf("       %s\n", line.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SolveParams targets(std::vector<double> ps) {
  SolveParams s;
  s.p_targets = std::move(ps);
  return s;
}

// Every converged grid record seen by any continuation in this run.
std::vector<SolutionRecord> all_grid_records;

std::vector<SolutionRecord> run_continuation(const GridPtr& g, std::vector<double> ps) {
  return continue_in_p(g, targets(std::move(ps)),
                       [](const SolutionRecord& r) { all_grid_records.push_back(r); });
}

double manufactured_error(double h) {
  const double pi = std::numbers::pi;
  auto exact = [pi](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
  auto g = build_grid(DomainSpec::rectangle(1, 1), h);
  auto rhs = GridField::from_function(g, [&](Point p) { return 2 * pi * pi * exact(p); });
  const GridField u = solve_spd(DiscreteLaplacian(g), rhs, 1e-13).solution;
  double err = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    err = std::max(err, std::abs(u.values[k] - exact(g->node_point(g->interior_nodes()[k]))));
  }
  return err;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs cmd twice into fresh directories and compares every output file.
bool twice_identical(const ExperimentConfig& base,
                     const std::function<int(const ExperimentConfig&, std::ostream&)>& cmd,
                     const std::string& tag, std::string& detail) {
  std::vector<fs::path> dirs;
  for (int run = 0; run < 2; ++run) {
    ExperimentConfig c = base;
    const fs::path dir = fs::temp_directory_path() / ("lelab_accept_" + tag + std::to_string(run));
    fs::remove_all(dir);
    c.output_dir = dir.string();
    std::ostringstream log;
    cmd(c, log);
    dirs.push_back(dir);
  }
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    ++files;
    const fs::path other = dirs[1] / entry.path().filename();
    if (!fs::exists(other) || read_all(entry.path()) != read_all(other)) {
      detail = tag + ": " + entry.path().filename().string() + " differs";
      return false;
    }
  }
  detail += tag + " " + std::to_string(files) + " files; ";
  return files > 0;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto disk = build_grid(DomainSpec::disk(1), kH);

  {  // 1
    const auto t0 = clock::now();
    const double ratio = manufactured_error(1.0 / 64) / manufactured_error(1.0 / 128);
    const double t = seconds_since(t0);
    report(1, "discretization order", ratio >= 3.5 && ratio <= 4.5 && t < 10,
           "L_inf error ratio h=1/64 -> 1/128 = " + fmt(ratio) + " in [3.5, 4.5]", t);
  }

  std::vector<SolutionRecord> disk_records;
  {  // 2
    const auto t0 = clock::now();
    disk_records = run_continuation(disk, {10, 20, 50, 100, 200});
    const RadialSolution o = shoot(10);
    const double t = seconds_since(t0);
    const double ds = std::abs(disk_records[0].sup_norm - o.u0) / o.u0;
    const double de = std::abs(disk_records[0].energy - o.energy) / o.energy;
    report(2, "solver cross-validation", ds <= 0.01 && de <= 0.01 && t < 60,
           "p=10 h=1/128: sup rel diff " + fmt(ds) + ", energy rel diff " + fmt(de) + " (<= 0.01)", t);
  }

  {  // 3, 4
    const auto t0 = clock::now();
    const double ps[] = {20, 50, 100, 200, 500, 1000};
    const auto sweep = oracle_sweep(ps);
    std::vector<LimitRow> e_rows, u_rows;
    for (const auto& s : sweep) {
      e_rows.push_back({s.p, s.energy});
      u_rows.push_back({s.p, s.u0});
    }
    bool shrinking = true;
    for (std::size_t i = 2; i < sweep.size(); ++i) {
      shrinking = shrinking && std::abs(sweep[i].energy - sweep[i - 1].energy) <
                                   std::abs(sweep[i - 1].energy - sweep[i - 2].energy);
    }
    const Extrapolation e = extrapolate(e_rows), u = extrapolate(u_rows);
    const double t = seconds_since(t0);
    const double re = std::abs(e.limit - k8PiE) / k8PiE, ru = std::abs(u.limit - kSqrtE) / kSqrtE;
    report(3, "sharp quantization", re <= 0.01 && shrinking && !e.degenerate && t < 60,
           "Aitken E_inf = " + fmt(e.limit) + " (rel " + fmt(re) + " to 8 pi e, <= 0.01), |dE| " +
               (shrinking ? "strictly decreasing" : "NOT decreasing"),
           t);
    report(4, "peak limit", ru <= 0.01 && !u.degenerate,
           "Aitken u0_inf = " + fmt(u.limit) + " (rel " + fmt(ru) + " to sqrt e, <= 0.01)", 0.0);
  }

  {  // 5
    const auto t0 = clock::now();
    const double d500 = tau_deviation(extract_bubble(shoot(500), 10.0), 10.0);
    const double d100 = tau_deviation(extract_bubble(shoot(100), 10.0), 10.0);
    report(5, "bubble profile", d500 <= 0.05 && d500 < d100,
           "max |tau - log(1+|y|^2)| on |y|<=10: p=500 " + fmt(d500) + " (<= 0.05), p=100 " + fmt(d100),
           seconds_since(t0));
  }

  {  // 6
    const auto t0 = clock::now();
    bool eq_ok = true, band_ok = true;
    double worst_eq = 0.0, worst_band = 0.0, lap_max = -INFINITY;
    for (const auto& r : all_grid_records) {
      // R = 10, or the largest ball that fits at small p
      const double fit = 0.9 * r.u.grid->domain().distance_to_boundary(r.peak) * std::exp(-0.5 * r.log_mu2);
      const BubbleProfile b = extract_bubble(r, std::min(10.0, fit), true);
      const LiouvilleReport lr = liouville_residual(b);
      worst_eq = std::max(worst_eq, lr.eq_tau / b.tolerance);
      eq_ok = eq_ok && lr.eq_tau <= 10 * b.tolerance;
      // The stencil sees 4(u/sup)^p plus the Newton residual, so both ends of
      // the band hold up to the solver tolerance: below where (u/sup)^p
      // underflows, above at the peak node where (u/sup)^p = 1.
      band_ok = band_ok && lr.lap_min > -10 * b.tolerance && lr.lap_max <= 4.0 + 10 * b.tolerance;
      worst_band = std::min(worst_band, lr.lap_min / b.tolerance);
      lap_max = std::max(lap_max, (lr.lap_max - 4.0) / b.tolerance);
    }
    std::vector<double> res;
    for (double sp : {0.5, 0.25, 0.125}) res.push_back(liouville_residual(synthetic_liouville_profile(10, sp)).liouville);
    const double r1 = res[0] / res[1], r2 = res[1] / res[2];
    const bool order = r1 >= 3.0 && r1 <= 5.0 && r2 >= 3.0 && r2 <= 5.0;
    report(6, "Liouville identities", eq_ok && band_ok && order,
           std::to_string(all_grid_records.size()) + " grid records: max eq residual/tol " +
               fmt(worst_eq) + " (<= 10), min lap/tol " + fmt(worst_band) + " (> -10), max (lap - 4)/tol " +
               fmt(lap_max) + " (<= 10); synthetic refinement ratios " + fmt(r1) + ", " + fmt(r2) +
               " in [3, 5]",
           seconds_since(t0));
  }

  {  // 7
    const auto t0 = clock::now();
    bool ok = true;
    double prev = 0.0;
    std::string vals;
    for (double p : {50.0, 100.0, 200.0, 500.0}) {
      const double rho = rho_at_delta0(shoot(p));
      ok = ok && rho > prev && (p < 100 || (rho >= 0.8 && rho <= 1.2));
      prev = rho;
      vals += " " + fmt(rho);
    }
    report(7, "average inequality", ok,
           "rho(delta0) at p=50,100,200,500:" + vals + " (increasing, in [0.8, 1.2] for p >= 100)",
           seconds_since(t0));
  }

  {  // 8
    const auto t0 = clock::now();
    run_continuation(build_grid(DomainSpec::rectangle(1, 1), 1.0 / 64), {10, 50, 200});
    run_continuation(build_grid(DomainSpec::annulus(0.5, 1), 1.0 / 64), {5, 10, 20});
    double worst = 0.0;
    for (const auto& r : all_grid_records) worst = std::max(worst, energy_identity_gap(r) / r.energy);
    report(8, "energy identity", worst <= 1e-10,
           std::to_string(all_grid_records.size()) + " grid records (disk, rectangle, annulus): max gap/E " +
               fmt(worst) + " (<= 1e-10)",
           seconds_since(t0));
  }

  const auto disk_solver = std::make_shared<const GreenSolver>(disk);
  {  // 9
    const auto t0 = clock::now();
    double worst_robin = 0.0;
    for (double r : {0.0, 0.3, 0.5}) {
      const double exact = std::log(1 - r * r) / kTwoPi;
      worst_robin = std::max(worst_robin, std::abs(disk_solver->solve({r, 0}).robin - exact));
    }
    const Point probes[] = {{0.5, 0}, {-0.25, 0.375}, {0.125, -0.625}, {0, 0.25}};
    double worst_rec = 0.0;
    for (const Point x : probes) {
      const GreenData gx = disk_solver->solve(x);
      for (const Point y : probes) {
        if (x == y) continue;
        worst_rec = std::max(worst_rec, std::abs(gx.value(y) - disk_solver->solve(y).value(x)));
      }
    }
    report(9, "Green accuracy", worst_robin <= 1e-2 && worst_rec <= 2e-2,
           "max robin error at |x| in {0, 0.3, 0.5}: " + fmt(worst_robin) +
               " (<= 1e-2); max reciprocity error " + fmt(worst_rec) + " (<= 2e-2)",
           seconds_since(t0));
  }

  {  // 10
    const auto t0 = clock::now();
    KRProblem dp(disk_solver, 1.0 / 16, 4 * kH);
    const KRResult d = kr_stationary(dp, 1, kr_default_starts(dp, 1, 2, 1));
    const double d_off = norm(d.best.points[0]);

    KRProblem rp(std::make_shared<const GreenSolver>(build_grid(DomainSpec::rectangle(1, 1), kH)),
                 1.0 / 16, 4 * kH);
    const KRResult r = kr_stationary(rp, 1, kr_default_starts(rp, 1, 2, 1));
    const double r_off = distance(r.best.points[0], {0.5, 0.5});

    KRProblem ap(std::make_shared<const GreenSolver>(build_grid(DomainSpec::annulus(0.5, 1), kH)),
                 1.0 / 16, 4 * kH);
    const KRResult a = kr_stationary(ap, 2, kr_default_starts(ap, 2, 3, 7));
    const Point x1 = a.best.points[0], x2 = a.best.points[1];
    const double anti = norm(x1 + x2);
    const bool ok = d.converged && d_off <= 2 * kH && r.converged && r_off <= 2 * kH &&
                    a.best.grad_norm <= 1e-3 && anti <= 2 * kH;
    report(10, "Kirchhoff-Routh stationarity", ok,
           "disk |x - 0| = " + fmt(d_off) + ", rectangle |x - c| = " + fmt(r_off) + " (<= 2h = " +
               fmt(2 * kH) + "); annulus n=2 grad_norm " + fmt(a.best.grad_norm) +
               " (<= 1e-3), |x1 + x2| " + fmt(anti) + " (<= 2h), radii " + fmt(norm(x1)) + ", " +
               fmt(norm(x2)),
           seconds_since(t0));
  }

  {  // 11
    const auto t0 = clock::now();
    const Point peak[] = {{0, 0}};
    const Point y[] = {{0.5, 0}};
    double grid_err[2], oracle_err[2], mu_over_h[2];
    int k = 0;
    for (double p : {50.0, 200.0}) {
      const SolutionRecord* rec = nullptr;
      for (const auto& r : disk_records) {
        if (r.p == p) rec = &r;
      }
      grid_err[k] = convloc_check(*rec, peak, y, *disk_solver, 5 * kH)[0].rel_error;
      mu_over_h[k] = std::exp(0.5 * rec->log_mu2) / kH;
      oracle_err[k] = convloc_check(oracle_record(shoot(p), disk), peak, y, *disk_solver, 5 * kH)[0].rel_error;
      ++k;
    }
    report(11, "far-field limit", grid_err[1] <= 0.1 && grid_err[1] < grid_err[0],
           "grid solves h=1/128, |y|=0.5: rel error p=50 " + fmt(grid_err[0]) + ", p=200 " +
               fmt(grid_err[1]) + " (<= 0.1 and decreasing)",
           seconds_since(t0));
    info("grid mu_p/h at p=50, 200: " + fmt(mu_over_h[0]) + ", " + fmt(mu_over_h[1]) +
         " (the bubble is not resolved below mu_p ~ 10h)");
    info("oracle sampled on the same grid, same Green solver: rel error p=50 " + fmt(oracle_err[0]) +
         ", p=200 " + fmt(oracle_err[1]));
  }

  {  // 12
    const auto t0 = clock::now();
    ExperimentConfig c;
    c.h = 1.0 / 32;
    c.solve.p_targets = {5, 10};
    c.oracle.p_list = {20, 50, 100};
    c.bubble.source = BubbleSource::Oracle;
    c.bubble.p_select = {50, 100};
    c.bubble.radii = {0.1, 0.3};
    c.green.probe_spacing = 0.125;
    c.green.test_points = {{0.5, 0}};
    c.green.convloc_p = {20};
    c.jobs = 2;
    ExperimentConfig ann = c;
    ann.domain = DomainSpec::annulus(0.5, 1);
    ann.h = 1.0 / 64;
    ann.green.n = 2;
    ann.green.random_starts = 2;
    ann.green.convloc_p.clear();
    ann.seed = 11;
    std::string detail;
    const bool ok = twice_identical(c, cmd_solve, "solve", detail) &&
                    twice_identical(c, cmd_oracle, "oracle", detail) &&
                    twice_identical(c, cmd_bubble, "bubble", detail) &&
                    twice_identical(c, cmd_green, "green", detail) &&
                    twice_identical(ann, cmd_green, "green_annulus", detail);
    report(12, "determinism", ok, "byte-identical reruns: " + detail, seconds_since(t0));
  }

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
