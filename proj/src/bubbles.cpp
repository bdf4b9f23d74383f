#include "lelab/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include "lelab/error.hpp"
#include "lelab/format.hpp"

namespace lelab {

namespace {

// (1 - 2 tau/p)^p, with the p = infinity limit exp(-2 tau).
double deficit_power(double tau, double p) {
  if (std::isinf(p)) return std::exp(-2.0 * tau);
  const double q = 1.0 - 2.0 * tau / p;
  return q > 0.0 ? std::exp(p * std::log1p(-2.0 * tau / p)) : 0.0;
}

// log(1 + d2 / mu^2) without forming mu^2, which underflows at large p.
double log_ratio_bubble(double d2, double log_mu2) {
  if (d2 <= 0.0) return 0.0;
  const double L = std::log(d2) - log_mu2;
  return L > 0.0 ? L + std::log1p(std::exp(-L)) : std::log1p(std::exp(L));
}

BubbleProfile blank_profile(double R, double spacing, int half_width) {
  BubbleProfile prof;
  prof.max_radius = R;
  prof.spacing = spacing;
  prof.half_width = half_width;
  const std::size_t n = static_cast<std::size_t>(prof.width()) * prof.width();
  prof.tau.assign(n, 0.0);
  prof.active.assign(n, 0);
  return prof;
}

}  // namespace

double liouville_bubble(Point y) { return std::log1p(y.x * y.x + y.y * y.y); }

std::vector<TauSample> BubbleProfile::samples() const {
  std::vector<TauSample> out;
  for (int b = -half_width; b <= half_width; ++b) {
    for (int a = -half_width; a <= half_width; ++a) {
      const Point y = position(a, b);
      if (norm(y) > max_radius) continue;
      out.push_back({y, tau[index(a, b)], liouville_bubble(y)});
    }
  }
  return out;
}

BubbleProfile extract_bubble(const SolutionRecord& record, double R, bool allow_unresolved) {
  ensure(R > 0.0, ErrorKind::InvalidArgument, "bubble radius must be > 0");
  const Grid& g = *record.u.grid;
  const double h = g.spacing();
  const double log_mu = 0.5 * record.log_mu2;
  const double mu = std::exp(log_mu);
  const Point center = record.peak;
  const double dist = g.domain().distance_to_boundary(center);
  if (std::log(R) + log_mu >= std::log(dist)) {
    throw Error(ErrorKind::BallExitsDomain, "ball of rescaled radius " + format_real(R) +
                                                " leaves the domain at p=" +
                                                format_real(record.p));
  }
  const bool resolved = log_mu >= std::log(10.0 * h);
  if (!resolved && !allow_unresolved) {
    throw Error(ErrorKind::ScaleUnderflow, "mu_p = " + format_real(mu) + " < 10h at p=" +
                                               format_real(record.p) +
                                               "; rescaled sampling cannot resolve tau");
  }

  const int K = std::max(2, static_cast<int>(std::ceil(R * mu / h)));
  BubbleProfile prof = blank_profile(R, h / mu, K);
  prof.p = record.p;
  prof.sup_norm = record.sup_norm;
  prof.log_mu2 = record.log_mu2;
  prof.center = center;
  prof.source = record.source;
  prof.resolved = resolved;
  // Delta'(-tau) = 4 Au / sup^p, so a residual F in Au = u^p appears as 4F/sup^p.
  prof.tolerance = 4.0 * record.newton.tolerance *
                   std::exp(-record.p * std::log(record.sup_norm));

  const int pi = g.node_i(record.peak_node);
  const int pj = g.node_j(record.peak_node);
  for (int b = -K; b <= K; ++b) {
    for (int a = -K; a <= K; ++a) {
      double u = 0.0;
      bool active = false;
      if (g.in_lattice(pi + a, pj + b)) {
        const int id = g.node_id(pi + a, pj + b);
        u = record.u.node_value(id);
        active = g.kind(id) == NodeKind::Interior;
      }
      prof.tau[prof.index(a, b)] = 0.5 * record.p * (1.0 - u / record.sup_norm);
      prof.active[prof.index(a, b)] = active;
    }
  }
  return prof;
}

BubbleProfile extract_bubble(const RadialSolution& solution, double R, double spacing) {
  ensure(R > 0.0 && spacing > 0.0, ErrorKind::InvalidArgument,
         "bubble radius and spacing must be > 0");
  if (std::log(R) >= solution.sigma_zero()) {
    throw Error(ErrorKind::BallExitsDomain, "ball of rescaled radius " + format_real(R) +
                                                " leaves the unit disk at p=" +
                                                format_real(solution.p));
  }
  const int K = static_cast<int>(std::ceil(R / spacing)) + 1;
  BubbleProfile prof = blank_profile(R, spacing, K);
  prof.p = solution.p;
  prof.sup_norm = solution.u0;
  prof.log_mu2 = -2.0 * solution.sigma_zero();
  prof.source = RecordSource::Oracle;
  const double s0 = solution.sigma_zero();
  for (int b = -K; b <= K; ++b) {
    for (int a = -K; a <= K; ++a) {
      const double s = norm(prof.position(a, b));
      prof.tau[prof.index(a, b)] = solution.tau(s);
      prof.active[prof.index(a, b)] = s == 0.0 || std::log(s) < s0;
    }
  }
  return prof;
}

BubbleProfile synthetic_liouville_profile(double R, double spacing) {
  ensure(R > 0.0 && spacing > 0.0, ErrorKind::InvalidArgument,
         "bubble radius and spacing must be > 0");
  const int K = static_cast<int>(std::ceil(R / spacing)) + 1;
  BubbleProfile prof = blank_profile(R, spacing, K);
  prof.p = std::numeric_limits<double>::infinity();
  prof.sup_norm = 1.0;
  prof.source = RecordSource::Oracle;
  for (int b = -K; b <= K; ++b) {
    for (int a = -K; a <= K; ++a) {
      prof.tau[prof.index(a, b)] = liouville_bubble(prof.position(a, b));
      prof.active[prof.index(a, b)] = 1;
    }
  }
  return prof;
}

double tau_deviation(const BubbleProfile& profile, double R) {
  double worst = 0.0;
  for (const TauSample& s : profile.samples()) {
    if (norm(s.y) <= R) worst = std::max(worst, std::abs(s.tau - s.t_ref));
  }
  return worst;
}

LiouvilleReport liouville_residual(const BubbleProfile& profile) {
  LiouvilleReport rep;
  rep.lap_min = std::numeric_limits<double>::infinity();
  rep.lap_max = -std::numeric_limits<double>::infinity();
  const int K = profile.half_width;
  const double inv_s2 = 1.0 / (profile.spacing * profile.spacing);
  for (int b = -K + 1; b <= K - 1; ++b) {
    for (int a = -K + 1; a <= K - 1; ++a) {
      const std::size_t k = profile.index(a, b);
      if (!profile.active[k] || norm(profile.position(a, b)) > profile.max_radius) continue;
      const double t = profile.tau[k];
      const double sum = profile.tau[profile.index(a + 1, b)] + profile.tau[profile.index(a - 1, b)] +
                         profile.tau[profile.index(a, b + 1)] + profile.tau[profile.index(a, b - 1)];
      const double lap = (sum - 4.0 * t) * inv_s2;
      rep.eq_tau = std::max(rep.eq_tau, std::abs(lap - 4.0 * deficit_power(t, profile.p)));
      rep.liouville = std::max(rep.liouville, std::abs(lap - 4.0 * std::exp(-2.0 * t)));
      rep.lap_min = std::min(rep.lap_min, lap);
      rep.lap_max = std::max(rep.lap_max, lap);
      ++rep.nodes;
    }
  }
  if (rep.nodes == 0) rep.lap_min = rep.lap_max = 0.0;
  return rep;
}

double liouville_mass(double R) { return 4.0 * std::numbers::pi * (1.0 - 1.0 / (1.0 + R * R)); }

double profile_mass(const BubbleProfile& profile, double R) {
  double acc = 0.0;
  for (const TauSample& s : profile.samples()) {
    if (norm(s.y) <= R) acc += 4.0 * std::exp(-2.0 * s.tau);
  }
  return acc * profile.spacing * profile.spacing;
}

void write_profile(std::ostream& out, const BubbleProfile& profile) {
  for (const TauSample& s : profile.samples()) {
    out << format_real(s.y.x) << ' ' << format_real(s.y.y) << ' ' << format_real(s.tau) << ' '
        << format_real(s.t_ref) << '\n';
  }
}

void write_profile(const std::string& path, const BubbleProfile& profile) {
  std::ofstream out(path, std::ios::binary);
  ensure(out.good(), ErrorKind::InvalidArgument, "cannot open " + path + " for writing");
  write_profile(out, profile);
}

namespace {

AverageReport averages(double p, double sup, double log_mu2, Point center, double delta0,
                       double min_radius, const std::function<double(Point)>& u,
                       std::span<const double> radii, double rho_min) {
  AverageReport rep;
  rep.delta0 = delta0;
  rep.rho_min = rho_min;
  for (double r : radii) {
    if (r <= min_radius) continue;
    const double u_bar = circle_average(u, center, r);
    const double t_bar = circle_average(
        [&](Point y) {
          const Point d = y - center;
          return log_ratio_bubble(d.x * d.x + d.y * d.y, log_mu2);
        },
        center, r);
    AverageRow row{r, std::max(u_bar, 0.0), t_bar, 0.0, false};
    row.rho = p * (1.0 - row.u_bar / sup) / (2.0 * t_bar);
    row.violation = row.rho < rho_min;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace

AverageReport average_inequality(const SolutionRecord& record, std::span<const double> radii,
                                 double rho_min) {
  const Grid& g = *record.u.grid;
  const double dist = g.domain().distance_to_boundary(record.peak);
  for (double r : radii) {
    if (!(r > 0.0 && r < dist)) {
      throw Error(ErrorKind::OutOfDomain, "average radius " + format_real(r) +
                                              " reaches the boundary (distance " +
                                              format_real(dist) + ")");
    }
  }
  return averages(record.p, record.sup_norm, record.log_mu2, record.peak, 0.5 * dist,
                  2.0 * g.spacing(), [&](Point y) { return sample_bilinear(record.u, y); },
                  radii, rho_min);
}

AverageReport average_inequality(const RadialSolution& solution, std::span<const double> radii,
                                 double rho_min) {
  for (double r : radii) {
    ensure(r > 0.0 && r < 1.0, ErrorKind::OutOfDomain,
           "average radius " + format_real(r) + " outside (0, 1)");
  }
  const double log_mu2 = -2.0 * solution.sigma_zero();
  return averages(solution.p, solution.u0, log_mu2, {0.0, 0.0}, 0.5, 0.0,
                  [&](Point y) { return solution.u(norm(y)); }, radii, rho_min);
}

double rho_at_delta0(const RadialSolution& solution) {
  const double r[] = {0.5};
  return average_inequality(solution, r).rows.front().rho;
}

double rho_at_delta0(const SolutionRecord& record) {
  const double d = record.u.grid->domain().distance_to_boundary(record.peak);
  const double r[] = {0.5 * d};
  const AverageReport rep = average_inequality(record, r);
  ensure(!rep.rows.empty(), ErrorKind::OutOfDomain, "delta0 is within two cells of the peak");
  return rep.rows.front().rho;
}

Extrapolation extrapolate(std::span<const LimitRow> rows) {
  ensure(rows.size() >= 3, ErrorKind::InvalidArgument, "extrapolation needs at least 3 rows");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ensure(rows[i].p > rows[i - 1].p, ErrorKind::InvalidArgument,
           "extrapolation rows must have increasing p");
  }
  // Aitken on the triple ending at index k; nullopt when the differences degenerate.
  auto aitken = [&](std::size_t k) -> std::optional<double> {
    const double x0 = rows[k - 2].value, x1 = rows[k - 1].value, x2 = rows[k].value;
    const double d1 = x1 - x0, d2 = x2 - x1;
    const double denom = d2 - d1;
    const double scale = std::max({std::abs(x0), std::abs(x1), std::abs(x2), 1e-300});
    if (std::abs(d1) <= 1e-15 * scale || std::abs(d2) <= 1e-15 * scale ||
        std::abs(denom) <= 1e-15 * scale) {
      return std::nullopt;
    }
    return x2 - d2 * d2 / denom;
  };
  const std::size_t last = rows.size() - 1;
  const std::optional<double> now = aitken(last);
  if (!now) return {rows[last].value, 0.0, true};
  std::optional<double> before;
  if (rows.size() >= 4) before = aitken(last - 1);
  const double reference = before ? *before : rows[last].value;
  return {*now, std::abs(*now - reference), false};
}

PeakReport detect_peaks(const SolutionRecord& record, double beta, double threshold) {
  const Grid& g = *record.u.grid;
  ensure(beta > 2.0 * g.spacing(), ErrorKind::InvalidArgument, "beta must exceed 2h");
  const GridField& u = record.u;
  const double level = threshold * record.sup_norm;

  std::vector<Peak> candidates;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    const double v = u.values[k];
    if (v < level) continue;
    const int id = g.interior_nodes()[k];
    const int i = g.node_i(id), j = g.node_j(id);
    bool is_max = true;
    for (int dj = -1; dj <= 1 && is_max; ++dj) {
      for (int di = -1; di <= 1 && is_max; ++di) {
        if ((di == 0 && dj == 0) || !g.in_lattice(i + di, j + dj)) continue;
        const int nid = g.node_id(i + di, j + dj);
        const double w = u.node_value(nid);
        // Plateaus keep only their first node in row-major order.
        is_max = nid < id ? v > w : v >= w;
      }
    }
    if (is_max) candidates.push_back({g.node_point(id), id, v, 0.0});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });

  PeakReport rep;
  for (const Peak& c : candidates) {
    const bool separate = std::all_of(rep.peaks.begin(), rep.peaks.end(), [&](const Peak& q) {
      return distance(q.location, c.location) >= beta;
    });
    if (separate) rep.peaks.push_back(c);
  }
  for (Peak& pk : rep.peaks) {
    for (std::size_t k = 0; k < u.values.size(); ++k) {
      if (distance(g.node_point(g.interior_nodes()[k]), pk.location) <= beta) {
        pk.mass = std::max(pk.mass, u.values[k]);
      }
    }
  }
  rep.no_peaks = rep.peaks.empty();
  return rep;
}

QuantizationReport quantization_report(std::vector<QuantizationRow> rows) {
  QuantizationReport rep;
  rep.rows = std::move(rows);
  if (rep.rows.size() >= 3) {
    std::vector<LimitRow> e, m;
    for (const auto& r : rep.rows) {
      e.push_back({r.p, r.energy});
      m.push_back({r.p, r.sup_norm});
    }
    rep.energy_limit = extrapolate(e);
    rep.sup_limit = extrapolate(m);
  }
  const double quantum = 8.0 * std::numbers::pi * std::exp(1.0);
  if (rep.energy_limit) {
    rep.bubble_count = std::max(1, static_cast<int>(std::lround(rep.energy_limit->limit / quantum)));
  } else if (!rep.rows.empty()) {
    rep.bubble_count = static_cast<int>(rep.rows.back().masses.size());
  }
  return rep;
}

std::string quantization_csv(const QuantizationReport& report) {
  std::size_t n_max = 0;
  for (const auto& r : report.rows) n_max = std::max(n_max, r.masses.size());
  std::vector<std::string> header{"p", "E_p", "sup_norm", "n_peaks"};
  for (std::size_t j = 0; j < n_max; ++j) header.push_back("m_" + std::to_string(j + 1));
  for (const char* c : {"log_mu2", "tau_dev_R", "rho_delta0"}) header.emplace_back(c);
  CsvTable table(header);
  for (const auto& r : report.rows) {
    std::vector<std::string> cells{format_real(r.p), format_real(r.energy),
                                   format_real(r.sup_norm), std::to_string(r.masses.size())};
    for (std::size_t j = 0; j < n_max; ++j) {
      cells.push_back(j < r.masses.size() ? format_real(r.masses[j]) : "");
    }
    cells.push_back(format_real(r.log_mu2));
    cells.push_back(r.tau_dev ? format_real(*r.tau_dev) : "Unresolved");
    cells.push_back(format_real(r.rho_delta0));
    table.add_row(std::move(cells));
  }
  if (report.energy_limit && report.sup_limit) {
    std::vector<std::string> cells{"extrapolated", format_real(report.energy_limit->limit),
                                   format_real(report.sup_limit->limit),
                                   std::to_string(report.bubble_count)};
    cells.resize(header.size());
    table.add_row(std::move(cells));
  }
  return table.str();
}

double mup2_ratio(double p, double sup_norm, double log_mu2) {
  return -log_mu2 / (p * std::log(sup_norm));
}

double mup2_constant(std::span<const SolutionRecord> records) {
  double c = 0.0;
  for (const auto& r : records) {
    ensure(r.p > 1.0, ErrorKind::InvalidArgument, "mup2_constant needs p > 1");
    c = std::max(c, std::abs(-r.log_mu2 - r.p * std::log(r.sup_norm)) / std::log(r.p));
  }
  return c;
}

}  // namespace lelab
