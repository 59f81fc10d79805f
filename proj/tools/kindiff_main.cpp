// Command-line driver: kindiff <subcommand> --config <path> [--out <dir>]
// [--deterministic] [--force]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kindiff/config.hpp"
#include "kindiff/errors.hpp"
#include "kindiff/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kinetic-to-diffusion limit toolkit"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out;
    bool deterministic = false;
    bool force = false;
  };

  const std::vector<std::string> modes = {"check", "diffmat", "kinetic", "diffusion",
                                          "converge"};
  const std::vector<std::string> descriptions = {
      "evaluate the limit-theorem hypotheses and write a report",
      "compute the per-cell diffusion matrix field",
      "run the kinetic solver at the first configured eps",
      "run the limiting diffusion solver",
      "run the eps sweep and the convergence studies"};
  std::vector<Args> args(modes.size());
  for (size_t i = 0; i < modes.size(); ++i) {
    CLI::App* sub = app.add_subcommand(modes[i], descriptions[i]);
    sub->add_option("--config", args[i].config, "run configuration file (JSON)")
        ->required();
    sub->add_option("--out", args[i].out, "output directory (overrides config)");
    sub->add_flag("--deterministic", args[i].deterministic,
                  "single-threaded, byte-reproducible outputs");
    sub->add_flag("--force", args[i].force,
                  "run studies even when the limit hypotheses fail");
  }

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < modes.size(); ++i) {
    if (!app.get_subcommand(modes[i])->parsed()) continue;
    try {
      kindiff::RunConfig cfg = kindiff::parse_config(args[i].config);
      if (!args[i].out.empty()) cfg.output = args[i].out;
      cfg.deterministic = cfg.deterministic || args[i].deterministic;
      cfg.force = cfg.force || args[i].force;
      return kindiff::run_subcommand(cfg, modes[i]);
    } catch (const kindiff::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
