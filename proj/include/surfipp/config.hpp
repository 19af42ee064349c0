#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "surfipp/mission.hpp"

namespace surfipp {

struct MeshSource {
  std::string kind = "cylinder";  // cylinder | airplane | file
  double radius = 6.0;
  double height = 20.0;
  double dome_height = 1.2;
  int target_facets = 400;
  AirplaneShape airplane;
  std::filesystem::path path;
};

struct ReportParams {
  int grid_points = 121;
  double trajectory_rate = 2.0;  // Hz
};

struct ScenarioConfig {
  MeshSource mesh;
  std::filesystem::path geodesic_cache;  // empty: no cache
  KernelParams kernel;
  double prior_mean = 0.0;
  CameraModel camera;
  DynamicsLimits dynamics;
  double voxel = 0.5;
  double margin = -1.0;  // < 0: camera.d_max + 2
  std::size_t max_voxels = 64u << 20;
  PlannerConfig planner;
  LibraryParams library;
  GroundTruthSpec ground_truth;
  std::filesystem::path ground_truth_csv;  // replaces the generator when set

  std::string method = "ipp";  // used by `run`
  int trials = 10;
  std::uint64_t seed = 1;
  int parallel = 1;
  std::filesystem::path output = "results";
  std::vector<std::string> ablation_priors{"mgp", "identity", "random_spd"};
  ReportParams report;

  void validate() const;
};

/// Parses YAML text. Relative paths resolve against base_dir. Unknown keys
/// and invalid values raise ConfigError naming the field.
ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Builds mesh, geodesics, world and every derived planner input.
Scenario build_scenario(const ScenarioConfig& cfg);

}  // namespace surfipp
