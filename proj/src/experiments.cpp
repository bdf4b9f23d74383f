#include "lelab/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>

#include "lelab/bubbles.hpp"
#include "lelab/error.hpp"
#include "lelab/format.hpp"
#include "lelab/greenfn.hpp"
#include "lelab/radial_oracle.hpp"

namespace lelab {

namespace fs = std::filesystem;

namespace {

fs::path prepare_output(const ExperimentConfig& config) {
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create output directory " + dir.string());
  return dir;
}

GridPtr make_grid(const ExperimentConfig& config) {
  try {
    return build_grid(config.domain, config.h);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("grid: ") + e.what());
  }
}

std::vector<SolutionRecord> solve_exponents(const GridPtr& grid, const ExperimentConfig& config,
                                            const std::vector<double>& exponents, std::ostream& log) {
  SolveParams params = config.solve;
  params.p_targets = exponents;
  try {
    params.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("solve: ") + e.what());
  }
  return continue_in_p(grid, params, [&](const SolutionRecord& r) {
    log << "p=" << format_real(r.p) << " newton_steps=" << r.newton.steps
        << " sup=" << format_real(r.sup_norm) << '\n';
  });
}

bool use_oracle(const ExperimentConfig& config, const SolutionRecord* grid_record) {
  if (config.bubble.source == BubbleSource::Oracle) return true;
  if (config.bubble.source == BubbleSource::Grid) return false;
  return config.domain.kind() == DomainSpec::Kind::Disk && grid_record != nullptr &&
         !bubble_resolved(*grid_record);
}

}  // namespace

bool bubble_resolved(const SolutionRecord& record) {
  return 0.5 * record.log_mu2 >= std::log(10.0 * record.u.grid->spacing());
}

int cmd_solve(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config);
  if (config.solve.p_targets.empty()) throw Error(ErrorKind::Config, "solve.p_targets is empty");
  const GridPtr grid = make_grid(config);
  const fs::path dir = prepare_output(config);
  std::vector<SolutionRecord> records;
  try {
    records = solve_exponents(grid, config, config.solve.p_targets, log);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    log << "solve failed: " << e.what() << '\n';
    return 1;
  }
  CsvTable table({"p", "energy", "sup_norm", "peak_x", "peak_y", "log_mu2", "newton_steps",
                  "residual"});
  for (const auto& r : records) {
    table.add_row({format_real(r.p), format_real(r.energy), format_real(r.sup_norm),
                   format_real(r.peak.x), format_real(r.peak.y), format_real(r.log_mu2),
                   std::to_string(r.newton.steps), format_real(r.newton.residual)});
    write_field_dump((dir / ("u_p" + format_tag(r.p) + ".dat")).string(), r.u);
  }
  table.write((dir / "solutions.csv").string());
  return 0;
}

int cmd_oracle(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config);
  const auto& p_list = config.oracle.p_list;
  if (p_list.empty()) throw Error(ErrorKind::Config, "oracle.p_list is empty");
  const fs::path dir = prepare_output(config);
  std::vector<RadialSolution> sols;
  try {
    sols = oracle_sweep(p_list, config.oracle.ode_tol, config.jobs);
  } catch (const Error& e) {
    log << "oracle failed: " << e.what() << '\n';
    return 1;
  }
  CsvTable table({"p", "u0", "r0", "energy", "log_mu2", "err_estimate"});
  std::vector<LimitRow> u_rows, e_rows;
  for (const auto& s : sols) {
    table.add_row({format_real(s.p), format_real(s.u0), format_real(s.r0), format_real(s.energy),
                   format_real(s.log_mu2), format_real(s.err_estimate)});
    u_rows.push_back({s.p, s.u0});
    e_rows.push_back({s.p, s.energy});
    log << "p=" << format_real(s.p) << " u0=" << format_real(s.u0)
        << " energy=" << format_real(s.energy) << '\n';
  }
  Extrapolation u_lim{sols.back().u0, 0.0, true};
  Extrapolation e_lim{sols.back().energy, 0.0, true};
  if (sols.size() >= 3) {
    u_lim = extrapolate(u_rows);
    e_lim = extrapolate(e_rows);
  }
  const bool degenerate = u_lim.degenerate || e_lim.degenerate;
  table.add_row({"extrapolated", format_real(u_lim.limit), "", format_real(e_lim.limit), "",
                 degenerate ? "degenerate" : format_real(std::max(u_lim.error, e_lim.error))});
  table.write((dir / "oracle.csv").string());
  return 0;
}

int cmd_bubble(const ExperimentConfig& config, std::ostream& log) {
  validate_bubble_config(config);
  const auto& exponents = config.bubble_exponents();
  if (exponents.empty()) throw Error(ErrorKind::Config, "no exponents (bubble.p_select or solve.p_targets)");
  const bool disk = config.domain.kind() == DomainSpec::Kind::Disk;
  if (config.bubble.source == BubbleSource::Oracle && !disk) {
    throw Error(ErrorKind::Config, "bubble.source \"oracle\" needs a disk domain");
  }
  const GridPtr grid = make_grid(config);
  const fs::path dir = prepare_output(config);
  const double disk_radius = disk ? config.domain.radius() : 1.0;

  std::vector<SolutionRecord> grid_records;
  if (config.bubble.source != BubbleSource::Oracle) {
    try {
      grid_records = solve_exponents(grid, config, exponents, log);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      log << "bubble failed: " << e.what() << '\n';
      return 1;
    }
  }

  bool unresolved = false;
  std::vector<QuantizationRow> rows;
  CsvTable averages({"p", "source", "r", "u_bar", "t_bar", "rho", "violation"});
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    const double p = exponents[i];
    const SolutionRecord* grid_rec = grid_records.empty() ? nullptr : &grid_records[i];
    QuantizationRow row;
    SolutionRecord record;
    std::optional<BubbleProfile> profile;
    AverageReport avg;
    try {
      if (use_oracle(config, grid_rec)) {
        const RadialSolution sol = shoot(p, config.oracle.ode_tol);
        record = oracle_record(sol, grid);
        profile = extract_bubble(sol, config.bubble.R, config.bubble.oracle_spacing);
        row.rho_delta0 = rho_at_delta0(sol);
        std::vector<double> unit_radii;
        for (double r : config.bubble.radii) unit_radii.push_back(r / disk_radius);
        avg = average_inequality(sol, unit_radii);
        for (auto& a : avg.rows) a.r *= disk_radius;
      } else {
        record = *grid_rec;
        try {
          profile = extract_bubble(record, config.bubble.R);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ScaleUnderflow && e.kind() != ErrorKind::BallExitsDomain) throw;
          log << "p=" << format_real(p) << " Unresolved: " << e.what() << '\n';
          unresolved = true;
        }
        row.rho_delta0 = rho_at_delta0(record);
        avg = average_inequality(record, config.bubble.radii);
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      log << "bubble failed at p=" << format_real(p) << ": " << e.what() << '\n';
      return 1;
    }
    const char* source = record.source == RecordSource::Oracle ? "oracle" : "grid";
    row.p = p;
    row.energy = record.energy;
    row.sup_norm = record.sup_norm;
    row.log_mu2 = record.log_mu2;
    const PeakReport peaks = detect_peaks(record, config.beta(), config.bubble.threshold);
    for (const Peak& pk : peaks.peaks) row.masses.push_back(pk.mass);
    if (peaks.no_peaks) log << "p=" << format_real(p) << " NoPeaks\n";
    if (profile) {
      row.tau_dev = tau_deviation(*profile, config.bubble.R);
      const LiouvilleReport lr = liouville_residual(*profile);
      log << "p=" << format_real(p) << " source=" << source
          << " tau_dev=" << format_real(*row.tau_dev) << " eq_tau=" << format_real(lr.eq_tau)
          << " liouville=" << format_real(lr.liouville) << " lap_min=" << format_real(lr.lap_min)
          << " lap_max=" << format_real(lr.lap_max) << '\n';
      write_profile((dir / ("bubble_p" + format_tag(p) + ".dat")).string(), *profile);
    }
    for (const AverageRow& a : avg.rows) {
      averages.add_row({format_real(p), source, format_real(a.r), format_real(a.u_bar),
                        format_real(a.t_bar), format_real(a.rho), a.violation ? "1" : "0"});
    }
    rows.push_back(std::move(row));
  }

  const QuantizationReport report = quantization_report(std::move(rows));
  {
    std::ofstream out(dir / "quantization.csv", std::ios::binary);
    out << quantization_csv(report);
  }
  if (!config.bubble.radii.empty()) averages.write((dir / "averages.csv").string());
  return unresolved ? 1 : 0;
}

int cmd_green(const ExperimentConfig& config, std::ostream& log) {
  validate_green_config(config);
  if (!config.green.convloc_p.empty() && config.green.test_points.empty()) {
    throw Error(ErrorKind::Config, "green.convloc_p needs green.test_points");
  }
  const GridPtr grid = make_grid(config);
  const fs::path dir = prepare_output(config);
  const auto solver = std::make_shared<const GreenSolver>(grid);
  KRResult kr;
  std::vector<std::vector<std::string>> convloc_rows;
  try {
    KRProblem problem(solver, config.green.probe_spacing, config.fd_step());
    problem.robin().compute_all(config.jobs);
    CsvTable robin({"x", "y", "robin"});
    for (const auto& r : problem.robin().table()) {
      robin.add_row({format_real(r.x.x), format_real(r.x.y), format_real(r.robin)});
    }
    robin.write((dir / "robin.csv").string());

    const auto starts =
        kr_default_starts(problem, config.green.n, config.green.random_starts, config.seed);
    kr = kr_stationary(problem, config.green.n, starts, config.green.kr_tol,
                       config.green.max_iterations);
    std::vector<std::string> header{"n", "value", "grad_norm", "converged"};
    std::vector<std::string> cells{std::to_string(config.green.n), format_real(kr.best.value),
                                   format_real(kr.best.grad_norm), kr.converged ? "1" : "0"};
    const Point c = config.domain.center();
    for (std::size_t j = 0; j < kr.best.points.size(); ++j) {
      const std::string s = std::to_string(j + 1);
      for (const std::string& col : {"x_" + s, "y_" + s, "r_" + s}) header.push_back(col);
      const Point x = kr.best.points[j];
      cells.push_back(format_real(x.x));
      cells.push_back(format_real(x.y));
      cells.push_back(format_real(distance(x, c)));
    }
    CsvTable kr_table(header);
    kr_table.add_row(cells);
    kr_table.write((dir / "kr.csv").string());
    log << "kr: grad_norm=" << format_real(kr.best.grad_norm) << " starts=" << kr.starts_tried
        << '\n';

    if (!config.green.convloc_p.empty()) {
      std::vector<SolutionRecord> grid_records;
      if (config.bubble.source != BubbleSource::Oracle) {
        grid_records = solve_exponents(grid, config, config.green.convloc_p, log);
      }
      for (std::size_t i = 0; i < config.green.convloc_p.size(); ++i) {
        const double p = config.green.convloc_p[i];
        const SolutionRecord* grid_rec = grid_records.empty() ? nullptr : &grid_records[i];
        SolutionRecord record;
        std::vector<Point> peaks;
        if (use_oracle(config, grid_rec)) {
          if (config.domain.kind() != DomainSpec::Kind::Disk) {
            throw Error(ErrorKind::Config, "bubble.source \"oracle\" needs a disk domain");
          }
          record = oracle_record(shoot(p, config.oracle.ode_tol), grid);
          peaks.push_back(config.domain.center());
        } else {
          record = *grid_rec;
          for (const Peak& pk : detect_peaks(record, config.beta(), config.bubble.threshold).peaks) {
            peaks.push_back(pk.location);
          }
        }
        const char* source = record.source == RecordSource::Oracle ? "oracle" : "grid";
        for (const ConvLocRow& r :
             convloc_check(record, peaks, config.green.test_points, *solver, config.delta())) {
          convloc_rows.push_back({format_real(p), source, format_real(r.y.x), format_real(r.y.y),
                                  format_real(r.pu), format_real(r.green_sum),
                                  format_real(r.rel_error)});
        }
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    log << "green failed: " << e.what() << '\n';
    return 1;
  }
  CsvTable convloc({"p", "source", "y1", "y2", "pu", "green_sum", "rel_error"});
  for (auto& r : convloc_rows) convloc.add_row(std::move(r));
  convloc.write((dir / "convloc.csv").string());
  if (!kr.converged) {
    log << "NotConverged: best grad_norm " << format_real(kr.best.grad_norm) << " > kr_tol "
        << format_real(config.green.kr_tol) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lelab
