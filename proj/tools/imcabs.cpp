#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "imcabs/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Interval Markov chain abstraction and verification of stochastic systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool verbose = false;

  const std::pair<const char*, imcabs::Phase> commands[] = {
      {"abstract", imcabs::Phase::Abstract},
      {"verify", imcabs::Phase::Verify},
      {"improve", imcabs::Phase::Improve},
      {"simulate", imcabs::Phase::Simulate},
      {"run", imcabs::Phase::Run},
  };
  const char* help[] = {"build the IMC and export imc.csv, labels.csv",
                        "robust value iteration on imc.csv, export result.csv",
                        "clustering passes on result.csv, export result_improved.csv",
                        "Monte Carlo validation of the latest result, export validation.csv",
                        "all phases in order, export summary.json"};
  std::optional<imcabs::Phase> phase;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("-c,--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", output, "output directory (overrides the config)");
    sub->add_option("-s,--seed", seed, "Monte Carlo seed (overrides the config)");
    sub->add_option("-j,--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", verbose, "progress messages on stderr");
    sub->callback([&phase, p = commands[i].second] { phase = p; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = imcabs::load_config(config_path);
    if (output) cfg.output_dir = *output;
    if (seed) cfg.validation.seed = *seed;
    if (threads) cfg.threads = *threads;
    imcabs::Logger log;
    if (verbose) log = [](const std::string& msg) { std::cerr << "imcabs: " << msg << '\n'; };
    imcabs::run_phase(cfg, *phase, log);
  } catch (const std::exception& e) {
    std::cerr << "imcabs: error: " << e.what() << '\n';
    return imcabs::exit_status(e);
  }
  return 0;
}
