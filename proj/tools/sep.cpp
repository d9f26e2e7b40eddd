// Command-line front end: sep <steady|run|ensemble|measure> --config FILE
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sep/sep.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("sep");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("SEP_LOG");
  const std::string lv = level ? level : "info";
  if (lv == "error")
    spdlog::set_level(spdlog::level::err);
  else if (lv == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    spdlog::set_level(spdlog::level::info);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw sep::config_error("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw sep::config_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

int fail(const std::string& code, const std::string& message) {
  nlohmann::json err{{"error", code}, {"message", message}};
  std::cout << err.dump() << std::endl;
  spdlog::error("{}", message);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Stochastic Euler-Poisson laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  sep::Overrides overrides;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;

  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--seed", seed, "master seed (overrides seed and noise.seed)");
    sub->add_option("--workers", workers, "worker threads for ensembles");
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    return sub;
  };
  CLI::App* steady = add("steady", "solve the steady state, write rho_bar and phi_bar");
  CLI::App* run = add("run", "integrate one trajectory, write the trajectory table");
  CLI::App* ensemble = add("ensemble", "Monte Carlo moments and decay-rate fits");
  CLI::App* measure = add("measure", "Krylov-Bogoliubov averages at doubling horizons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) {
      if (sub->count("--seed")) overrides.seed = seed;
      if (sub->count("--workers")) overrides.workers = workers;
      if (sub->count("--out")) overrides.out = out;
    }
    sep::ExperimentConfig cfg = sep::parse_config(load_json(config_path));
    sep::apply(cfg, overrides);
    spdlog::debug("config loaded from {}", config_path);

    nlohmann::json summary;
    if (steady->parsed())
      summary = sep::cmd_steady(cfg);
    else if (run->parsed())
      summary = sep::cmd_run(cfg);
    else if (ensemble->parsed())
      summary = sep::cmd_ensemble(cfg);
    else if (measure->parsed())
      summary = sep::cmd_measure(cfg);
    spdlog::info("{} finished", app.get_subcommands().front()->get_name());
    std::cout << summary.dump() << std::endl;
    return 0;
  } catch (const sep::error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail("internal_error", e.what());
  }
}
