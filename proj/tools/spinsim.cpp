// spinsim: run, validate or inspect an experiment config.
//   spinsim simulate <config> [--out <dir>]   (default dir: $SPINSIM_OUT or ./spinsim_out)
//   spinsim validate <config>
//   spinsim transitions <config>

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "spinsim/spinsim.hpp"

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("SPINSIM_OUT"); env != nullptr && *env != '\0') return env;
  return "spinsim_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NMR/NQR spin dynamics simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;

  auto* simulate = app.add_subcommand("simulate", "Run an experiment and write its outputs");
  simulate->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out,-o", out_dir, "Output directory (default: $SPINSIM_OUT or ./spinsim_out)");

  auto* validate = app.add_subcommand("validate", "Parse and validate a config");
  validate->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);

  auto* transitions = app.add_subcommand("transitions", "Print the transition frequencies of H0");
  transitions->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const spinsim::ExperimentConfig cfg = spinsim::parse_config(config_path);
    if (*validate) {
      std::cout << config_path << ": ok\n";
      return 0;
    }
    if (*transitions) {
      const auto system = spinsim::build_system(cfg.system);
      const auto h0 = spinsim::build_h0(cfg.system, system);
      std::cout << "frequency_MHz,lower,upper\n";
      for (const auto& t : spinsim::transition_frequencies(h0)) {
        std::cout << spinsim::format_number(t.frequency) << ',' << t.lower << ',' << t.upper << '\n';
      }
      return 0;
    }
    if (out_dir.empty()) out_dir = default_out_dir();
    const auto report = spinsim::run_experiment(cfg, out_dir);
    std::cout << "wrote " << out_dir << " (" << report.steps.size() << " step(s), "
              << spinsim::format_number(report.wall_seconds) << " s)\n";
    return 0;
  } catch (const spinsim::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
