#include "conorbit/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace conorbit;
  CLI::App app{"Connecting orbits of Tonelli Lagrangians on surfaces"};
  app.require_subcommand(1);
  app.fallthrough();

  RunOptions options;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
  auto* out_opt = app.add_option("--out-dir", out_dir, "Directory for CSV and verdict files");
  auto* threads_opt =
      app.add_option("--threads", threads, "Worker threads for multistart solvers")
          ->check(CLI::PositiveNumber);

  std::string config;
  auto* run = app.add_subcommand("run", "Run a scenario config file");
  run->add_option("config", config, "Config file (key = value lines)")->required();

  std::string fixture;
  auto* repro = app.add_subcommand("reproduce", "Run the reference fixtures (all or one)");
  repro->add_option("name", fixture, "Fixture name");

  auto* models = app.add_subcommand("list-models", "List catalog models and their parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) options.seed = seed;
  if (*out_opt) options.out_dir = out_dir;
  if (*threads_opt) options.threads = threads;

  try {
    if (*models) {
      for (const auto& entry : model_catalog()) {
        std::cout << entry.id << "  " << entry.description << "\n";
        for (const auto& [key, value] : entry.defaults) {
          std::cout << "    model." << key << " = " << value << "\n";
        }
      }
      return 0;
    }
    if (*run) return run_scenario_file(config, options, std::cout).exit_code;
    ReproContext ctx;
    if (options.seed) ctx.seed = *options.seed;
    if (options.threads) ctx.threads = *options.threads;
    RunResult res = reproduce_suite(fixture, ctx, std::cout);
    if (res.exit_code != 2) write_artifacts(options.out_dir.value_or("out"), res);
    return res.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
