#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lelab/config.hpp"
#include "test_support.hpp"

using namespace lelab;
namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* env = std::getenv("LELAB_BIN");
  return env ? env : "lelab";
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("lelab_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  for (std::string l; std::getline(s, l);) out.push_back(l);
  return out;
}

// Runs the binary with stdout/stderr captured into dir; returns the exit code.
int run(const fs::path& dir, const std::string& args) {
  const std::string cmd = binary() + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::stringstream s(row);
  for (std::string c; std::getline(s, c, ',');) out.push_back(c);
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(R"({"domain": {"kind": "annulus", "inner_radius": 0.5,
      "outer_radius": 1}, "h": 0.03125, "green": {"n": 2, "test_points": [[0.7, 0]]}, "seed": 9})");
  CHECK(c.domain.kind() == DomainSpec::Kind::Annulus);
  CHECK(c.h == 0.03125);
  CHECK(c.green.n == 2);
  CHECK(c.green.test_points.size() == 1);
  CHECK(c.seed == 9);
  CHECK(c.fd_step() == 4 * 0.03125);
  CHECK(error_kind([] { parse_config(R"({"hh": 1})"); }) == ErrorKind::Config);
  CHECK(error_kind([] { parse_config(R"({"solve": {"p_target": [3]}})"); }) == ErrorKind::Config);
  CHECK(error_kind([] { parse_config(R"({"h": "small"})"); }) == ErrorKind::Config);
  CHECK(error_kind([] { parse_config(R"({"domain": {"kind": "triangle"}})"); }) == ErrorKind::Config);
  CHECK(error_kind([] { parse_config(R"({"domain": {"kind": "disk", "radius": -1}})"); }) ==
        ErrorKind::Config);
  CHECK(error_kind([] { parse_config("{"); }) == ErrorKind::Config);
  CHECK(parse_real_list("10, 20,50") == std::vector<double>{10, 20, 50});
  CHECK(error_kind([] { parse_real_list("10,x"); }) == ErrorKind::Config);
  ExperimentConfig bad;
  bad.oracle.p_list = {10, 10};
  CHECK(error_kind([&] { validate_config(bad); }) == ErrorKind::Config);
}

TEST_CASE("solve with a single target") {
  const fs::path dir = scratch("solve");
  write_file(dir / "c.json", R"({"h": 0.0625, "solve": {"p_start": 3, "p_targets": [3]}})");
  CHECK(run(dir, "solve --config " + (dir / "c.json").string() + " --out " + (dir / "o").string()) == 0);
  const auto rows = lines(read_file(dir / "o" / "solutions.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "p,energy,sup_norm,peak_x,peak_y,log_mu2,newton_steps,residual");
  CHECK(split(rows[1])[0] == "3");
  CHECK(fs::exists(dir / "o" / "u_p3.dat"));
}

TEST_CASE("usage and config errors exit with 2") {
  const fs::path dir = scratch("errors");
  CHECK(run(dir, "solve --config /nonexistent/cfg.json") == 2);
  CHECK(read_file(dir / "stderr.txt").find("/nonexistent/cfg.json") != std::string::npos);
  CHECK(run(dir, "oracle --p-list 10,5 --out " + dir.string()) == 2);
  CHECK(run(dir, "frobnicate") == 2);
  CHECK(run(dir, "solve --h") == 2);
  write_file(dir / "typo.json", R"({"solve": {"p_targetz": [3]}})");
  CHECK(run(dir, "solve --config " + (dir / "typo.json").string()) == 2);
  CHECK(run(dir, "oracle --help") == 0);
}

TEST_CASE("oracle with one exponent flags the extrapolation") {
  const fs::path dir = scratch("oracle");
  CHECK(run(dir, "oracle --p-list 10 --out " + dir.string()) == 0);
  const auto rows = lines(read_file(dir / "oracle.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "p,u0,r0,energy,log_mu2,err_estimate");
  CHECK(rows[2].rfind("extrapolated,", 0) == 0);
  CHECK(rows[2].find("degenerate") != std::string::npos);
}

TEST_CASE("oracle sweep extrapolates to the quantized energy") {
  const fs::path dir = scratch("oracle_sweep");
  CHECK(run(dir, "oracle --p-list 20,50,100,200,500,1000 --jobs 2 --out " + dir.string()) == 0);
  const auto rows = lines(read_file(dir / "oracle.csv"));
  REQUIRE(rows.size() == 8);
  const auto last = split(rows.back());
  const double e = std::stod(last[3]);
  CHECK(std::abs(e - 68.3178755) <= 0.01 * 68.3178755);
}

TEST_CASE("bubble on an unresolved grid exits with 1") {
  const fs::path dir = scratch("bubble_grid");
  write_file(dir / "c.json", R"({"h": 0.03125, "solve": {"p_targets": [10]},
      "bubble": {"source": "grid"}})");
  CHECK(run(dir, "bubble --config " + (dir / "c.json").string() + " --out " + dir.string()) == 1);
  CHECK(read_file(dir / "quantization.csv").find("Unresolved") != std::string::npos);
}

TEST_CASE("oracle-backed bubble") {
  const fs::path dir = scratch("bubble_oracle");
  write_file(dir / "c.json", R"({"h": 0.03125, "bubble": {"source": "oracle", "p_select": [500]}})");
  CHECK(run(dir, "bubble --config " + (dir / "c.json").string() + " --out " + dir.string()) == 0);
  const auto rows = lines(read_file(dir / "quantization.csv"));
  REQUIRE(rows.size() >= 2);
  const auto header = split(rows[0]);
  const auto cells = split(rows[1]);
  REQUIRE(header.size() == cells.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "tau_dev_R") CHECK(std::stod(cells[i]) <= 0.05);
    if (header[i] == "n_peaks") CHECK(cells[i] == "1");
  }
  CHECK(fs::exists(dir / "bubble_p500.dat"));
}

TEST_CASE("green on the disk is deterministic") {
  const fs::path a = scratch("green_a"), b = scratch("green_b");
  const std::string cfg = R"({"h": 0.015625, "green": {"n": 1, "probe_spacing": 0.125,
      "test_points": [[0.5, 0]], "convloc_p": [50, 200]}, "bubble": {"source": "oracle"}, "seed": 3})";
  write_file(a / "c.json", cfg);
  CHECK(run(a, "green --config " + (a / "c.json").string() + " --out " + (a / "o").string()) == 0);
  CHECK(run(a, "green --config " + (a / "c.json").string() + " --out " + (b / "o").string()) == 0);
  for (const char* f : {"robin.csv", "kr.csv", "convloc.csv"}) {
    CHECK(read_file(a / "o" / f) == read_file(b / "o" / f));
  }
  const auto kr = lines(read_file(a / "o" / "kr.csv"));
  REQUIRE(kr.size() == 2);
  const auto cells = split(kr[1]);
  CHECK(cells[3] == "1");
  CHECK(std::hypot(std::stod(cells[4]), std::stod(cells[5])) <= 2 * 0.015625);
  const auto conv = lines(read_file(a / "o" / "convloc.csv"));
  REQUIRE(conv.size() == 3);
  CHECK(std::stod(split(conv[2])[6]) < std::stod(split(conv[1])[6]));
}

TEST_CASE("green reports a non-converged search") {
  const fs::path dir = scratch("green_nc");
  write_file(dir / "c.json", R"({"h": 0.015625, "domain": {"kind": "annulus", "inner_radius": 0.5,
      "outer_radius": 1}, "green": {"n": 2, "probe_spacing": 0.125, "random_starts": 0,
      "kr_tol": 1e-14, "max_iterations": 1}})");
  CHECK(run(dir, "green --config " + (dir / "c.json").string() + " --out " + dir.string()) == 1);
  CHECK(read_file(dir / "stdout.txt").find("NotConverged") != std::string::npos);
}
