#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "fluctsel/core/error.hpp"
#include "fluctsel/experiments/experiments.hpp"

int main(int argc, char** argv) {
  using namespace fluctsel;
  CLI::App app{"Fluctuating selection: simulation, estimation and checks"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::optional<std::string> config;
  Overrides ov;
  bool print_defaults = false;
  app.add_option("--config", config, "INI configuration file");
  app.add_option("--seed", ov.seed, "master seed");
  app.add_option("--out", ov.out, "output directory");
  app.add_option("--workers", ov.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--prior", ov.prior, "restrict to one prior")
      ->check(CLI::IsMember({"prior1", "prior2", "invgamma"}));
  app.add_option("--laplace", ov.laplace, "Laplace-marginalized latents")
      ->check(CLI::IsMember({"on", "off", "both"}));
  app.add_option("--data", ov.data, "brood CSV (year,laying_date,n_fledglings)");
  app.add_flag("--print-config", print_defaults, "print every config key with its default and exit");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate a dataset and its latent states"},
      {"compare", "MLE and Bayesian estimates on one dataset"},
      {"bias-study", "absolute error over replicates, divergence filter applied"},
      {"efficiency-study", "min ESS per second, full vs Laplace latents"},
      {"la-check", "draws, QQ and contour exports comparing full and Laplace runs"},
      {"model-select", "candidate ladder ranked by AIC"},
      {"verify", "oracle checks; nonzero exit on failure"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name == "verify") {
      sub->add_flag_function("--quick", [&](std::int64_t) { ov.quick = true; }, "smaller instance counts");
    }
  }

  CLI11_PARSE(app, argc, argv);

  if (print_defaults) {
    std::cout << default_config_text();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig c = load_config(config, ov);
    omp_set_num_threads(c.workers);
    const CommandResult r = run_command(name, c);
    std::cout << r.report;
    for (const auto& f : r.outputs) std::cerr << "wrote " << f << '\n';
    return r.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
