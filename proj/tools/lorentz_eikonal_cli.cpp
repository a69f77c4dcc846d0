// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Exit status: 0 success, 1 computation error,
// 2 configuration error.
#include <CLI11.hpp>

#include <iostream>

#include "lorentz_eikonal/run.hpp"

namespace le = lorentz_eikonal;

int main(int argc, char** argv) {
  CLI::App app{"Variational solver for the timelike eikonal equation on globally hyperbolic slabs"};
  app.require_subcommand(1);

  std::string config, out, point, from, to;
  int terms = 5;
  double c = -1.0;
  bool oracle = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config, "JSON configuration file");
    if (config_required) opt->required();
    sub->add_option("--out", out, "output directory (overrides configuration and environment)");
  };

  auto* solve = app.add_subcommand("solve", "solve on the configured grid");
  add_common(solve, true);
  auto* verify = app.add_subcommand("verify", "verify viscosity, orientation, semiconcavity and level-set properties");
  add_common(verify, true);
  auto* ray = app.add_subcommand("ray", "calibrated ray from a point");
  add_common(ray, true);
  ray->add_option("--point", point, "event t,x[,y,z] (overrides task_params.point)");
  auto* stability = app.add_subcommand("stability", "stability under perturbed data");
  add_common(stability, true);
  stability->add_option("--terms", terms, "number of terms n = 1, 2, 4, ...")->check(CLI::Range(1, 20));
  auto* counter = app.add_subcommand("counterexample", "the family |x - c| + c");
  add_common(counter, false);
  counter->add_option("--c", c, "negative parameter c (required without --config)");
  auto* distance = app.add_subcommand("distance", "Lorentzian distance between two events");
  add_common(distance, true);
  distance->add_option("--from", from, "event t,x[,y,z] (overrides task_params.from)");
  distance->add_option("--to", to, "event t,x[,y,z] (overrides task_params.to)");
  distance->add_flag("--oracle", oracle, "also evaluate the lattice longest-path oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors count as configuration errors
  }

  le::RunConfig cfg;
  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    // The subcommand decides the task; one configuration can serve several.
    if (name == "counterexample" && config.empty()) {
      if (!counter->count("--c")) throw le::ConfigError("--c is required without --config");
      cfg = le::counterexample_config(c);
    } else {
      cfg = le::load_config(config, le::task_from_string(name));
    }
    if (name == "ray" && !point.empty()) cfg.params.point = le::parse_point(point, cfg.spacetime->dim());
    if (name == "stability") {
      if (stability->count("--terms")) {
        cfg.params.terms.clear();
        for (int k = 0; k < terms; ++k) cfg.params.terms.push_back(1 << k);
      }
    }
    if (name == "counterexample" && counter->count("--c")) cfg.params.c = c;
    if (name == "counterexample" && !(cfg.params.c < 0.0)) throw le::ConfigError("c must be negative");
    if (name == "distance") {
      if (!from.empty()) cfg.params.from = le::parse_point(from, cfg.spacetime->dim());
      if (!to.empty()) cfg.params.to = le::parse_point(to, cfg.spacetime->dim());
      if (!cfg.params.from || !cfg.params.to) throw le::ConfigError("distance needs --from and --to");
      cfg.params.oracle = cfg.params.oracle || oracle;
    }
    if (name == "ray" && !cfg.params.point) throw le::ConfigError("ray needs --point");
    le::apply_environment(cfg);
    if (!out.empty()) cfg.output_dir = out;
  } catch (const le::Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }

  try {
    const le::RunResult r = le::run(cfg);
    std::cout << r.summary << '\n';
    for (const auto& f : r.files) std::cout << "wrote " << f.string() << '\n';
    return r.exit_code;
  } catch (const le::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
