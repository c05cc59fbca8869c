#include "subdiff/errors.hpp"
#include "subdiff/experiments.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kConfig = 2, kSolver = 3, kReconstruction = 4 };

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--seed", opt.seed, "noise seed (overrides the config)");
  cmd->add_option("--jobs", opt.jobs, "OpenMP threads (0 keeps the runtime default)")
      ->check(CLI::NonNegativeNumber);
}

int run(const Options& opt,
        const std::function<subdiff::RunResult(const subdiff::RunConfig&,
                                               const std::filesystem::path&)>& command) {
  try {
    auto config = subdiff::load_config(opt.config);
    if (opt.seed) config.noise.seed = *opt.seed;
    if (opt.jobs > 0) omp_set_num_threads(opt.jobs);
    const auto result = command(config, opt.out);
    std::cout << result.summary << '\n';
    for (const auto& f : result.files) std::cout << "  wrote " << f.string() << '\n';
    return kOk;
  } catch (const subdiff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const subdiff::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const subdiff::ReconstructionError& e) {
    std::cerr << "reconstruction failed: " << e.what() << '\n';
    return kReconstruction;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inclusion detection for time-fractional subdiffusion"};
  app.require_subcommand(1);
  Options opt;
  std::function<int()> action;

  auto bind = [&](const char* name, const char* help, auto command) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, opt);
    cmd->callback([&, command] { action = [&, command] { return run(opt, command); }; });
  };
  bind("forward", "solve the forward problems and write fields and traces", subdiff::run_forward);
  bind("locate-one", "single inclusion by probe-segment root finding", subdiff::run_locate_one);
  bind("locate-multi", "several inclusions by the truncated-SVD indicator",
       subdiff::run_locate_multi);
  bind("oracle-check", "boundary vs interior evaluation of the measurement",
       subdiff::run_oracle_check);
  bind("sweep", "repeat the configured algorithm over eps, sigma and aspect lists",
       subdiff::run_sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  return action ? action() : kOther;
}
