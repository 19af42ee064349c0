#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "surfipp/config.hpp"

namespace surfipp {

/// A method in a multi-trial experiment: planner kind plus prior
/// ("mgp", "identity" or "random_spd"). Methods sharing a seed_tag fly with
/// identical seed streams.
struct MethodSpec {
  std::string name;
  PlannerKind kind = PlannerKind::ipp;
  std::string prior = "mgp";
  std::uint64_t seed_tag = 0;
};

struct TrialSummary {
  std::string method;
  int trial = 0;
  std::uint64_t seed = 0;
  double initial_trace = 0.0;
  double final_trace = 0.0;
  double final_rmse = 0.0;
  double elapsed = 0.0;
  double last_measurement = 0.0;
  int measurements = 0;
  int collision_samples = 0;
  bool trace_monotone = true;
  double wall_seconds = 0.0;
};

/// Mean and normal-approximation 95% band (mean -/+ 1.96 sd / sqrt(k)).
struct Band {
  std::vector<double> mean, lo, hi;
};

struct MethodCurves {
  std::string name;
  Band trace, rmse;
};

struct ExperimentResult {
  std::vector<double> grid;  // [0, B] inclusive
  std::vector<MethodCurves> methods;
  std::vector<TrialSummary> trials;  // method-major, trial order
  double wall_seconds = 0.0;
};

Band confidence_band(const std::vector<std::vector<double>>& series);

/// Trial t of method m uses seed seed_combine(base, m.seed_tag, t); the
/// ground truth of trial t is shared by all methods.
ExperimentResult run_experiment(const Scenario& scenario, const std::vector<MethodSpec>& methods,
                                int trials, std::uint64_t base_seed, int parallel,
                                int grid_points);

std::vector<MethodSpec> compare_methods();
std::vector<MethodSpec> ablation_methods(const std::vector<std::string>& priors);

/// Curves as CSV: t, then <method>_mean, <method>_lo, <method>_hi per method.
void write_band_csv(const ExperimentResult& res, bool trace, const std::filesystem::path& path);
void write_trials_csv(const ExperimentResult& res, const std::filesystem::path& path);

struct CliOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> parallel;
};

void cmd_run(const std::filesystem::path& config, const CliOverrides& o);
void cmd_compare(const std::filesystem::path& config, const CliOverrides& o);
void cmd_ablate(const std::filesystem::path& config, const CliOverrides& o);
/// Renders every compare/ablate CSV found in dir to SVG. Throws ConfigError
/// when there is nothing to plot.
void cmd_plot(const std::filesystem::path& dir);

/// Minimal SVG line chart of mean curves with shaded bands.
std::string render_band_svg(const std::string& title, const std::string& y_label,
                            const std::vector<double>& t,
                            const std::vector<std::string>& names,
                            const std::vector<Band>& bands);

}  // namespace surfipp
