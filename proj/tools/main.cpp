// Command-line front end: generate domains, minimize the boundary-value
// functional, verify the decay/minimality theory on the result, and survey
// domain geometry. See README.md for the artifact formats.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "nplap/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Neumann p-Laplacian laboratory: direct minimization on weighted "
      "graphs with level-set decay verification"};
  app.require_subcommand(1);

  nplap::RunConfig cfg;
  std::string format = "json,csv";

  auto add_common = [&](CLI::App* sub, bool needs_data) {
    sub->add_option("--domain", cfg.domain,
                    "kind:n[:h] (path, grid, lshape, annulus_grid, "
                    "sierpinski) or a domain JSON file")
        ->capture_default_str();
    sub->add_option("--out", cfg.out, "output directory for artifacts")
        ->capture_default_str();
    sub->add_option("--format", format,
                    "comma-separated artifact formats: json, csv")
        ->capture_default_str();
    sub->add_option("--seed", cfg.seed, "seed for data and sampling")
        ->capture_default_str();
    sub->add_option("--p", cfg.p, "exponent of the energy, p > 1")
        ->capture_default_str();
    sub->add_option("--threads", cfg.threads, "worker threads for checks")
        ->capture_default_str();
    if (needs_data) {
      sub->add_option("--data", cfg.data,
                      "dipole, constant_sign_patch, random_compatible, or an "
                      "inline JSON object of boundary values")
          ->capture_default_str();
      sub->add_option("--tol", cfg.tol, "solver gradient tolerance")
          ->capture_default_str();
      sub->add_option("--max-iter", cfg.max_iter, "solver iteration cap")
          ->capture_default_str();
      sub->add_flag("--project-compat", cfg.project_compat,
                    "project the data onto the compatible (zero-mean) slice "
                    "instead of rejecting it");
      sub->add_option("--c-budget", cfg.c_budget,
                      "acceptance budget for the energy-level inequality "
                      "ratio")
          ->capture_default_str();
    }
  };

  add_common(app.add_subcommand("generate", "emit domain.json"), false);
  add_common(app.add_subcommand(
                 "solve", "minimize the functional, emit solution.json"),
             true);
  add_common(app.add_subcommand(
                 "verify",
                 "solve, then check the level-set and minimality theory"),
             true);
  add_common(app.add_subcommand("diagnose",
                                "survey domain geometry, emit "
                                "diagnostics.json"),
             false);
  add_common(app.add_subcommand("full", "generate + solve + verify + "
                                        "diagnose"),
             true);

  CLI11_PARSE(app, argc, argv);

  cfg.command = nplap::parse_command(app.get_subcommands().front()->get_name());
  cfg.format_json = format.find("json") != std::string::npos;
  cfg.format_csv = format.find("csv") != std::string::npos;
  if (!cfg.format_json && !cfg.format_csv) {
    std::cout << "verdict: error (unknown --format '" << format << "')\n";
    return 1;
  }
  return nplap::run(cfg, std::cout);
}
