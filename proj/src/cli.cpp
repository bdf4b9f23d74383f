#include "lelab/cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "lelab/config.hpp"
#include "lelab/error.hpp"
#include "lelab/experiments.hpp"

namespace lelab {

namespace {

struct Overrides {
  std::string config_path;
  std::string p_targets;
  std::string p_list;
  std::optional<double> h;
  std::optional<double> ode_tol;
  std::optional<int> jobs;
  std::string out;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->set_help_flag("--help", "print this help and exit");  // -h would clash with --h
  sub->add_option("--config", o.config_path, "JSON config file");
  sub->add_option("--p-targets", o.p_targets, "comma separated exponents, e.g. 10,20,50");
  sub->add_option("--h", o.h, "grid spacing");
  sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output directory");
}

ExperimentConfig build_config(const Overrides& o, const std::string& command) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.h) cfg.h = *o.h;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.ode_tol) cfg.oracle.ode_tol = *o.ode_tol;
  if (!o.p_list.empty()) cfg.oracle.p_list = parse_real_list(o.p_list);
  if (!o.p_targets.empty()) {
    const auto list = parse_real_list(o.p_targets);
    if (command == "oracle") {
      cfg.oracle.p_list = list;
    } else if (command == "bubble") {
      cfg.bubble.p_select = list;
      cfg.solve.p_targets = list;
    } else if (command == "green") {
      cfg.green.convloc_p = list;
    } else {
      cfg.solve.p_targets = list;
    }
  }
  return cfg;
}

}  // namespace

int run_cli(int argc, char** argv) { return run_cli(argc, argv, std::cout, std::cerr); }

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lane-Emden blow-up lab"};
  app.require_subcommand(1);
  Overrides o;
  for (const char* name : {"solve", "oracle", "bubble", "green"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, o);
    if (std::string(name) == "oracle") {
      sub->add_option("--p-list", o.p_list, "comma separated exponents (strictly increasing)");
      sub->add_option("--ode-tol", o.ode_tol, "relative/absolute ODE tolerance");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig cfg = build_config(o, command);
    if (command == "solve") return cmd_solve(cfg, out);
    if (command == "oracle") return cmd_oracle(cfg, out);
    if (command == "bubble") return cmd_bubble(cfg, out);
    return cmd_green(cfg, out);
  } catch (const Error& e) {
    err << "lelab " << command << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    err << "lelab " << command << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lelab
