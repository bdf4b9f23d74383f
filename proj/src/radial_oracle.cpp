#include "lelab/radial_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <thread>

#include "lelab/error.hpp"
#include "lelab/format.hpp"

namespace lelab {

namespace {

constexpr double kStartRadius = 1e-8;  // rescaled radius where the series hands over
constexpr int kMaxSteps = 1'000'000;

// State: tau, d tau/d sigma, int (d tau/d sigma)^2, int s^2 q^(p+1), with q = 1 - 2 tau / p.
using State = std::array<double, 4>;

struct Rhs {
  double p;

  State operator()(double sigma, const State& y) const {
    const double q = 1.0 - 2.0 * y[0] / p;
    double weight = 0.0;  // s^2 q^p
    if (q > 0.0) weight = std::exp(2.0 * sigma + p * std::log1p(-2.0 * y[0] / p));
    return {y[1], 4.0 * weight, y[1] * y[1], weight * std::max(q, 0.0)};
  }
};

// Dormand-Prince 5(4).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepResult {
  State y;
  State dy;   // derivative at the new point (FSAL)
  State err;
};

StepResult dp_step(const Rhs& f, double t, const State& y, const State& k1, double h) {
  auto comb = [&](std::initializer_list<std::pair<double, const State*>> terms) {
    State out = y;
    for (const auto& [c, k] : terms) {
      for (int i = 0; i < 4; ++i) out[i] += h * c * (*k)[i];
    }
    return out;
  };
  const State k2 = f(t + c2 * h, comb({{a21, &k1}}));
  const State k3 = f(t + c3 * h, comb({{a31, &k1}, {a32, &k2}}));
  const State k4 = f(t + c4 * h, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  const State k5 = f(t + c5 * h, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  const State k6 = f(t + h, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  StepResult res;
  res.y = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
  res.dy = f(t + h, res.y);
  for (int i = 0; i < 4; ++i) {
    res.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                      e7 * res.dy[i]);
  }
  return res;
}

// Quintic Hermite on [a, a+h] from value, first and second derivative at both ends.
double quintic(double t, double h, double y0, double d0, double e0, double y1, double d1,
               double e1v, bool derivative) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  if (!derivative) {
    return y0 * (1 - 10 * t3 + 15 * t4 - 6 * t5) + h * d0 * (t - 6 * t3 + 8 * t4 - 3 * t5) +
           h * h * e0 * (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5) +
           h * h * e1v * (0.5 * t3 - t4 + 0.5 * t5) + h * d1 * (-4 * t3 + 7 * t4 - 3 * t5) +
           y1 * (10 * t3 - 15 * t4 + 6 * t5);
  }
  return (y0 * (-30 * t2 + 60 * t3 - 30 * t4) + h * d0 * (1 - 18 * t2 + 32 * t3 - 15 * t4) +
          h * h * e0 * (t - 4.5 * t2 + 6 * t3 - 2.5 * t4) +
          h * h * e1v * (1.5 * t2 - 4 * t3 + 2.5 * t4) + h * d1 * (-12 * t2 + 28 * t3 - 15 * t4) +
          y1 * (30 * t2 - 60 * t3 + 30 * t4)) /
         h;
}

}  // namespace

struct RadialBuilder {
  static RadialSolution shoot_once(double p, double ode_tol, double amplitude);
};

RadialSolution RadialBuilder::shoot_once(double p, double ode_tol, double amplitude) {
  ensure(std::isfinite(p) && p > 1.0, ErrorKind::InvalidArgument, "shoot needs p > 1");
  ensure(ode_tol > 0.0, ErrorKind::InvalidArgument, "ode_tol must be > 0");
  ensure(amplitude > 0.0, ErrorKind::InvalidArgument, "amplitude must be > 0");
  const Rhs f{p};
  const double target = 0.5 * p;

  RadialSolution sol;
  sol.p = p;
  double sigma = std::log(kStartRadius);
  const double s2 = kStartRadius * kStartRadius;
  // Series: tau = s^2 - s^4/2, so d tau/d sigma = 2 s^2 - 2 s^4.
  State y{s2 - 0.5 * s2 * s2, 2.0 * s2 - 2.0 * s2 * s2, s2 * s2, 0.5 * s2};
  State dy = f(sigma, y);

  std::vector<double> tau_v{y[0]}, dtau_v{y[1]}, ddtau_v{dy[1]};
  std::vector<double> sig_v{sigma};

  double h = 0.05;
  double max_err = 0.0;
  int steps = 0;
  bool found = false;
  State y_zero{};
  while (!found) {
    if (++steps > kMaxSteps) {
      throw Error(ErrorKind::NoZeroFound, "p=" + format_real(p) + ": no zero after " +
                                              std::to_string(kMaxSteps) + " steps");
    }
    const StepResult st = dp_step(f, sigma, y, dy, h);
    double err = 0.0;
    double abs_err = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double sc = ode_tol + ode_tol * std::max(std::abs(y[i]), std::abs(st.y[i]));
      err = std::max(err, std::abs(st.err[i]) / sc);
      abs_err = std::max(abs_err, std::abs(st.err[i]));
    }
    if (!(err <= 1.0)) {
      h *= std::clamp(0.9 * std::pow(std::max(err, 1e-300), -0.2), 0.1, 0.9);
      if (!std::isfinite(err)) h *= 0.1;
      continue;
    }
    max_err = std::max(max_err, abs_err);
    const double sigma_new = sigma + h;
    if (st.y[0] >= target) {
      // Bisection for tau = p/2 on the dense output of this step.
      double lo = 0.0, hi = 1.0;
      const double eps = std::max(1e-13, 4e-16 * std::abs(sigma_new)) / h;
      while (hi - lo > eps) {
        const double mid = 0.5 * (lo + hi);
        const double v = quintic(mid, h, y[0], y[1], dy[1], st.y[0], st.y[1], st.dy[1], false);
        (v >= target ? hi : lo) = mid;
      }
      const double h_zero = 0.5 * (lo + hi) * h;
      // Re-take the partial step so the accumulated integrals end at the zero.
      y_zero = h_zero > 0.0 ? dp_step(f, sigma, y, dy, h_zero).y : y;
      sigma += h_zero;
      found = true;
      sig_v.push_back(sigma);
      tau_v.push_back(target);
      dtau_v.push_back(y_zero[1]);
      ddtau_v.push_back(f(sigma, y_zero)[1]);
      break;
    }
    sigma = sigma_new;
    y = st.y;
    dy = st.dy;
    sig_v.push_back(sigma);
    tau_v.push_back(y[0]);
    dtau_v.push_back(y[1]);
    ddtau_v.push_back(dy[1]);
    h *= std::clamp(0.9 * std::pow(std::max(err, 1e-300), -0.2), 0.2, 5.0);
  }

  sol.sigma_start_ = sig_v.front();
  sol.sigma_zero_ = sigma;
  sol.sigma_ = std::move(sig_v);
  sol.tau_ = std::move(tau_v);
  sol.dtau_ = std::move(dtau_v);
  sol.ddtau_ = std::move(ddtau_v);
  sol.steps = steps;
  sol.max_local_error = max_err;

  // Undo the normalisation: u(r) = a (1 - 2 tau(r/mu_a)/p), mu_a^2 p a^(p-1) = 8,
  // then u_unit(x) = r0^(2/(p-1)) u(r0 x).
  const double log_a = std::log(amplitude);
  const double log_mu_a = 0.5 * (std::log(8.0) - std::log(p) - (p - 1.0) * log_a);
  sol.log_r0 = log_mu_a + sol.sigma_zero_;
  sol.r0 = std::exp(sol.log_r0);
  const double log_u0 = log_a + 2.0 * sol.log_r0 / (p - 1.0);
  sol.u0 = std::exp(log_u0);
  sol.log_mu2 = log_mu2_from(p, sol.u0);
  const double u0sq = sol.u0 * sol.u0;
  sol.energy = u0sq * 8.0 * std::numbers::pi / p * y_zero[2];
  sol.energy_alt = u0sq * 16.0 * std::numbers::pi * y_zero[3];

  sol.samples.reserve(sol.sigma_.size());
  for (std::size_t k = 0; k < sol.sigma_.size(); ++k) {
    const double x = std::exp(sol.sigma_[k] - sol.sigma_zero_);
    const double u = sol.u0 * (1.0 - 2.0 * sol.tau_[k] / p);
    const double du = -2.0 * sol.u0 / p * sol.dtau_[k] / x;
    sol.samples.push_back({x, std::max(u, 0.0), du});
  }
  return sol;
}

double RadialSolution::hermite(double sigma, bool derivative) const {
  auto it = std::upper_bound(sigma_.begin(), sigma_.end(), sigma);
  std::size_t k = static_cast<std::size_t>(std::distance(sigma_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, sigma_.size() - 1) - 1;
  const double h = sigma_[k + 1] - sigma_[k];
  const double t = std::clamp((sigma - sigma_[k]) / h, 0.0, 1.0);
  return quintic(t, h, tau_[k], dtau_[k], ddtau_[k], tau_[k + 1], dtau_[k + 1], ddtau_[k + 1],
                 derivative);
}

double RadialSolution::tau(double s) const {
  if (s <= 0.0) return 0.0;
  const double sigma = std::log(s);
  if (sigma < sigma_start_) return s * s - 0.5 * s * s * s * s;
  if (sigma >= sigma_zero_) return 0.5 * p;
  return hermite(sigma, false);
}

double RadialSolution::tau_log_derivative(double s) const {
  if (s <= 0.0) return 0.0;
  const double sigma = std::log(s);
  if (sigma < sigma_start_) return 2.0 * s * s - 2.0 * s * s * s * s;
  return hermite(std::min(sigma, sigma_zero_), true);
}

double RadialSolution::u(double r) const {
  if (r <= 0.0) return u0;
  if (r >= 1.0) return 0.0;
  return std::max(0.0, u0 * (1.0 - 2.0 * tau(r * std::exp(sigma_zero_)) / p));
}

double RadialSolution::du(double r) const {
  if (r <= 0.0) return 0.0;
  const double s = std::min(r, 1.0) * std::exp(sigma_zero_);
  return -2.0 * u0 / p * tau_log_derivative(s) / std::min(r, 1.0);
}

RadialSolution shoot(double p, double ode_tol, double amplitude) {
  RadialSolution sol = RadialBuilder::shoot_once(p, ode_tol, amplitude);
  const RadialSolution coarse = RadialBuilder::shoot_once(p, 10.0 * ode_tol, amplitude);
  sol.err_estimate = std::max(std::abs(sol.u0 - coarse.u0), 4.0 * 2.2e-16 * sol.u0);
  return sol;
}

std::vector<RadialSolution> oracle_sweep(std::span<const double> p_list, double ode_tol,
                                         int jobs) {
  ensure(!p_list.empty(), ErrorKind::InvalidArgument, "oracle sweep needs at least one p");
  for (std::size_t i = 1; i < p_list.size(); ++i) {
    ensure(p_list[i] > p_list[i - 1], ErrorKind::InvalidArgument, "p_list must be increasing");
  }
  std::vector<RadialSolution> out(p_list.size());
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, p_list.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < p_list.size(); ++i) out[i] = shoot(p_list[i], ode_tol);
    return out;
  }
  std::vector<std::exception_ptr> errors(p_list.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < p_list.size(); i += workers) {
        try {
          out[i] = shoot(p_list[i], ode_tol);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

SolutionRecord oracle_record(const RadialSolution& solution, const GridPtr& grid) {
  const DomainSpec& domain = grid->domain();
  ensure(domain.kind() == DomainSpec::Kind::Disk, ErrorKind::InvalidArgument,
         "oracle records exist only on disks");
  const double radius = domain.radius();
  const double p = solution.p;
  const double amp = std::exp(-2.0 * std::log(radius) / (p - 1.0));
  GridField u = GridField::from_function(
      grid, [&](Point x) { return amp * solution.u(norm(x) / radius); });

  SolutionRecord rec;
  rec.p = p;
  rec.u = std::move(u);
  rec.sup_norm = amp * solution.u0;
  rec.energy = amp * amp * solution.energy;
  rec.peak = {0.0, 0.0};
  rec.peak_node = grid->node_id(static_cast<int>(std::lround(-grid->origin().x / grid->spacing())),
                                static_cast<int>(std::lround(-grid->origin().y / grid->spacing())));
  rec.log_mu2 = log_mu2_from(p, rec.sup_norm);
  rec.source = RecordSource::Oracle;
  return rec;
}

}  // namespace lelab
