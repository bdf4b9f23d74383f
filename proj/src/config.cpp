#include "lelab/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "lelab/error.hpp"
#include "lelab/format.hpp"

namespace lelab {

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Config, where + ": " + what);
}

// Rejects keys outside `allowed` so typos fail loudly.
void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) config_error(where, "unknown key '" + item.key() + "'");
  }
}

double real_at(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number()) config_error(where + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_error(where + "." + key, "must be finite");
  return x;
}

int int_at(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) config_error(where + "." + key, "expected an integer");
  return v.get<int>();
}

std::vector<double> reals_at(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_array()) config_error(where + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) config_error(where + "." + key, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

void require_increasing(const std::vector<double>& v, const std::string& where) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) config_error(where, "values must be strictly increasing");
  }
}

DomainSpec parse_domain(const json& d) {
  const std::string where = "domain";
  if (!d.is_object() || !d.contains("kind") || !d.at("kind").is_string()) {
    config_error(where, "needs a string 'kind'");
  }
  const std::string kind = d.at("kind").get<std::string>();
  try {
    if (kind == "disk") {
      check_keys(d, where, {"kind", "radius"});
      return DomainSpec::disk(d.contains("radius") ? real_at(d, "radius", where) : 1.0);
    }
    if (kind == "rectangle") {
      check_keys(d, where, {"kind", "width", "height"});
      return DomainSpec::rectangle(d.contains("width") ? real_at(d, "width", where) : 1.0,
                                   d.contains("height") ? real_at(d, "height", where) : 1.0);
    }
    if (kind == "annulus") {
      check_keys(d, where, {"kind", "inner_radius", "outer_radius"});
      return DomainSpec::annulus(real_at(d, "inner_radius", where),
                                 real_at(d, "outer_radius", where));
    }
  } catch (const json::out_of_range& e) {
    config_error(where, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    config_error(where, e.what());
  }
  config_error(where + ".kind", "unknown domain kind '" + kind + "'");
}

void parse_solve(const json& s, SolveParams& out) {
  const std::string w = "solve";
  check_keys(s, w, {"p_start", "p_targets", "continuation_ratio", "newton_tol", "max_newton_steps",
                    "damping_min", "gd_tol"});
  if (s.contains("p_start")) out.p_start = real_at(s, "p_start", w);
  if (s.contains("p_targets")) out.p_targets = reals_at(s, "p_targets", w);
  if (s.contains("continuation_ratio")) out.continuation_ratio = real_at(s, "continuation_ratio", w);
  if (s.contains("newton_tol")) out.newton_tol = real_at(s, "newton_tol", w);
  if (s.contains("max_newton_steps")) out.max_newton_steps = int_at(s, "max_newton_steps", w);
  if (s.contains("damping_min")) out.damping_min = real_at(s, "damping_min", w);
  if (s.contains("gd_tol")) out.gd_tol = real_at(s, "gd_tol", w);
}

void parse_bubble(const json& b, BubbleSettings& out) {
  const std::string w = "bubble";
  check_keys(b, w, {"R", "beta", "threshold", "radii", "source", "p_select", "oracle_spacing"});
  if (b.contains("R")) out.R = real_at(b, "R", w);
  if (b.contains("beta")) out.beta = real_at(b, "beta", w);
  if (b.contains("threshold")) out.threshold = real_at(b, "threshold", w);
  if (b.contains("radii")) out.radii = reals_at(b, "radii", w);
  if (b.contains("p_select")) out.p_select = reals_at(b, "p_select", w);
  if (b.contains("oracle_spacing")) out.oracle_spacing = real_at(b, "oracle_spacing", w);
  if (b.contains("source")) {
    const json& v = b.at("source");
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "auto") {
      out.source = BubbleSource::Auto;
    } else if (s == "grid") {
      out.source = BubbleSource::Grid;
    } else if (s == "oracle") {
      out.source = BubbleSource::Oracle;
    } else {
      config_error(w + ".source", "expected \"auto\", \"grid\" or \"oracle\"");
    }
  }
}

void parse_green(const json& g, GreenSettings& out) {
  const std::string w = "green";
  check_keys(g, w, {"probe_spacing", "fd_step", "kr_tol", "n", "test_points", "random_starts",
                    "max_iterations", "delta", "convloc_p"});
  if (g.contains("probe_spacing")) out.probe_spacing = real_at(g, "probe_spacing", w);
  if (g.contains("fd_step")) out.fd_step = real_at(g, "fd_step", w);
  if (g.contains("kr_tol")) out.kr_tol = real_at(g, "kr_tol", w);
  if (g.contains("n")) out.n = int_at(g, "n", w);
  if (g.contains("random_starts")) out.random_starts = int_at(g, "random_starts", w);
  if (g.contains("max_iterations")) out.max_iterations = int_at(g, "max_iterations", w);
  if (g.contains("delta")) out.delta = real_at(g, "delta", w);
  if (g.contains("convloc_p")) out.convloc_p = reals_at(g, "convloc_p", w);
  if (g.contains("test_points")) {
    const json& pts = g.at("test_points");
    if (!pts.is_array()) config_error(w + ".test_points", "expected an array of [x, y] pairs");
    for (const json& p : pts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        config_error(w + ".test_points", "expected an array of [x, y] pairs");
      }
      out.test_points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
}

void parse_oracle(const json& o, OracleSettings& out) {
  const std::string w = "oracle";
  check_keys(o, w, {"p_list", "ode_tol"});
  if (o.contains("p_list")) out.p_list = reals_at(o, "p_list", w);
  if (o.contains("ode_tol")) out.ode_tol = real_at(o, "ode_tol", w);
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size() || !std::isfinite(v)) {
      throw Error(ErrorKind::Config, "cannot read '" + item + "' as a number in list '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty number list");
  return out;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, origin + ": " + e.what());
  }
  ExperimentConfig cfg;
  try {
    check_keys(root, "config",
               {"domain", "h", "solve", "bubble", "green", "oracle", "output_dir", "seed"});
    if (root.contains("domain")) cfg.domain = parse_domain(root.at("domain"));
    if (root.contains("h")) cfg.h = real_at(root, "h", "config");
    if (root.contains("solve")) parse_solve(root.at("solve"), cfg.solve);
    if (root.contains("bubble")) parse_bubble(root.at("bubble"), cfg.bubble);
    if (root.contains("green")) parse_green(root.at("green"), cfg.green);
    if (root.contains("oracle")) parse_oracle(root.at("oracle"), cfg.oracle);
    if (root.contains("output_dir")) {
      if (!root.at("output_dir").is_string()) config_error("output_dir", "expected a string");
      cfg.output_dir = root.at("output_dir").get<std::string>();
    }
    if (root.contains("seed")) {
      if (!root.at("seed").is_number_unsigned()) {
        config_error("seed", "expected a nonnegative integer");
      }
      cfg.seed = root.at("seed").get<std::uint64_t>();
    }
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, origin + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
  if (!(c.h > 0.0)) fail("h must be > 0");
  if (!c.solve.p_targets.empty()) {
    try {
      c.solve.validate();
    } catch (const Error& e) {
      fail(std::string("solve: ") + e.what());
    }
  }
  require_increasing(c.solve.p_targets, "solve.p_targets");
  require_increasing(c.bubble.p_select, "bubble.p_select");
  require_increasing(c.oracle.p_list, "oracle.p_list");
  require_increasing(c.green.convloc_p, "green.convloc_p");
  for (double p : c.oracle.p_list) {
    if (!(p > 1.0)) fail("oracle.p_list: exponents must be > 1");
  }
  if (!(c.oracle.ode_tol > 0.0)) fail("oracle.ode_tol must be > 0");
  if (!(c.bubble.R > 0.0)) fail("bubble.R must be > 0");
  if (!(c.bubble.threshold > 0.0)) fail("bubble.threshold must be > 0");
  if (!(c.bubble.oracle_spacing > 0.0)) fail("bubble.oracle_spacing must be > 0");
  for (double r : c.bubble.radii) {
    if (!(r > 0.0)) fail("bubble.radii must be > 0");
  }
  if (c.green.n < 1) fail("green.n must be >= 1");
  if (c.green.random_starts < 0) fail("green.random_starts must be >= 0");
  if (c.green.max_iterations < 1) fail("green.max_iterations must be >= 1");
  if (!(c.green.kr_tol > 0.0)) fail("green.kr_tol must be > 0");
  if (c.jobs < 1) fail("jobs must be >= 1");
}

void validate_bubble_config(const ExperimentConfig& c) {
  validate_config(c);
  if (!(c.beta() > 2.0 * c.h)) throw Error(ErrorKind::Config, "bubble.beta must exceed 2h");
}

void validate_green_config(const ExperimentConfig& c) {
  validate_bubble_config(c);
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
  if (!(c.green.probe_spacing >= 2.0 * c.h)) fail("green.probe_spacing must be >= 2h");
  if (!(c.fd_step() >= 2.0 * c.h)) fail("green.fd_step must be >= 2h");
  if (!(c.delta() >= 5.0 * c.h)) fail("green.delta must be >= 5h");
}

}  // namespace lelab
