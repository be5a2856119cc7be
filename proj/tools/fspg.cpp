// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0
//
// fspg: ground states of the fractional Schrodinger-Poisson system on a
// periodic box, computed by constrained minimization on the Pohozaev-Nehari
// manifold, plus fibering diagnostics, result verification, and nonexistence
// probes. All heavy computation is single-threaded; the FSPG_THREADS cap on
// internal parallelism is therefore always honored.

#include <CLI11.hpp>

#include "fspg/run.hpp"

int main(int argc, char **argv) {
  CLI::App app{"fractional Schrodinger-Poisson ground-state toolkit"};
  app.require_subcommand(1);

  fspg::RunOptions opts;
  std::string field_path, result_path;
  std::uint64_t seed = 0;
  bool have_seed = false;

  auto add_common = [&](CLI::App *cmd, bool with_config) {
    if (with_config)
      cmd->add_option("--config", opts.config_path, "configuration file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory (overrides [output] dir)");
    cmd->add_option("--seed", seed, "RNG seed (overrides solver.seed)")
        ->each([&](const std::string &) { have_seed = true; });
    cmd->add_flag("--quiet", opts.quiet, "suppress the summary line");
  };

  CLI::App *solve = app.add_subcommand(
      "solve", "compute the ground state (exit 0 converged, 2 collapse, 3 no convergence)");
  add_common(solve, true);

  CLI::App *fiber = app.add_subcommand("fiber-scan", "emit gamma(theta) CSV for a stored field");
  add_common(fiber, true);
  fiber->add_option("field", field_path, "field file (.fspg)")->required();

  CLI::App *verify =
      app.add_subcommand("verify", "run residual, level and identity suites on a stored result");
  verify->add_option("result", result_path, "result.json path")->required();
  verify->add_flag("--quiet", opts.quiet, "suppress the JSON report");

  CLI::App *probe =
      app.add_subcommand("probe", "run the nonexistence probe matching the configured regime");
  add_common(probe, true);

  CLI11_PARSE(app, argc, argv);
  if (have_seed) opts.seed = seed;

  if (solve->parsed()) return fspg::cmd_solve(opts);
  if (fiber->parsed()) return fspg::cmd_fiber_scan(opts, field_path);
  if (verify->parsed()) return fspg::cmd_verify(result_path, opts.quiet);
  if (probe->parsed()) return fspg::cmd_probe(opts);
  return 1;
}
