// Command-line front end: toda_lab <subcommand> --config run.toml [--out dir]
#include <CLI11.hpp>

#include <iostream>

#include "toda/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for partial blow-up solutions of the SU(3) Toda system"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 1, verbosity = 1;
  bool seed_given = false;

  for (const auto& name : toda::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "TOML experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides `out` in the config)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "random seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--verbosity", verbosity, "0 silent, 1 stages, 2 solver traces, 3 progress")
        ->check(CLI::Range(0, 3));
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    toda::ExperimentConfig cfg = toda::load_config(config_path);
    if (seed_given) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    toda::RunOptions opts;
    opts.threads = threads;
    opts.verbosity = verbosity;
    opts.log = &std::cerr;
    const int rc = toda::run_command(command, cfg, cfg.out, opts);
    if (verbosity >= 1 && rc == 0) std::cerr << "results in " << cfg.out << "\n";
    return rc;
  } catch (const toda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const toda::Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    return 3;
  }
}
