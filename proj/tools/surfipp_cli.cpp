#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "surfipp/experiment.hpp"
#include "surfipp/log.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surfipp: informative path planning on triangle-mesh surfaces"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int trials = 0;
  int parallel = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario YAML (plot: also accepts a results directory)")
        ->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--trials", trials, "trials per method")->check(CLI::PositiveNumber);
    sub->add_option("--parallel", parallel, "concurrent trials")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "fly one mission and write its logs");
  auto* compare = app.add_subcommand("compare", "ipp vs coverage vs random over many trials");
  auto* ablate = app.add_subcommand("ablate", "ipp with mgp, identity and random SPD priors");
  auto* plot = app.add_subcommand("plot", "render compare/ablate CSVs as SVG");
  for (auto* sub : {run, compare, ablate, plot}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  surfipp::CliOverrides o;
  if (!out.empty()) o.out = out;
  if (run->count("--seed") || compare->count("--seed") || ablate->count("--seed") ||
      plot->count("--seed")) {
    o.seed = seed;
  }
  if (trials > 0) o.trials = trials;
  if (parallel > 0) o.parallel = parallel;

  try {
    if (*run) {
      surfipp::cmd_run(config, o);
    } else if (*compare) {
      surfipp::cmd_compare(config, o);
    } else if (*ablate) {
      surfipp::cmd_ablate(config, o);
    } else {
      std::filesystem::path dir = config;
      if (o.out) {
        dir = *o.out;
      } else if (!std::filesystem::is_directory(dir)) {
        dir = surfipp::load_config(config).output;
      }
      surfipp::cmd_plot(dir);
    }
  } catch (const surfipp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
