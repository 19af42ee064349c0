#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "surfipp/baselines.hpp"
#include "surfipp/ground_truth.hpp"
#include "surfipp/planner.hpp"

namespace surfipp {

enum class PlannerKind { ipp, coverage, random };
std::string to_string(PlannerKind kind);
PlannerKind parse_planner_kind(const std::string& name);

/// Shared, immutable inputs of every mission on one scene.
struct Scenario {
  std::shared_ptr<const SurfaceMesh> mesh;
  std::shared_ptr<const GeodesicField> geo;
  std::shared_ptr<const WorldModel> world;
  KernelParams kernel;
  double prior_mean = 0.0;
  CameraModel cam;
  DynamicsLimits lim;
  PlannerConfig planner;
  LibraryParams library_params;
  GroundTruthSpec truth;
  std::shared_ptr<const GroundTruthField> fixed_truth;  // used instead of `truth` when set

  std::shared_ptr<const Eigen::MatrixXd> prior_cov;  // mGP prior
  std::shared_ptr<const ViewpointLibrary> library;
  std::shared_ptr<const YawField> yaw_field;
  std::shared_ptr<const LibraryGraph> graph;
  std::shared_ptr<const CoveragePlan> coverage;

  double sample_step() const;
  LosParams los() const;
};

/// Builds the derived pieces (prior, library, yaw field, graph, coverage
/// plan) from mesh, geodesics, world and the parameter fields.
void finalize_scenario(Scenario& s);

struct MissionEvent {
  double time = 0.0;
  Viewpoint viewpoint;
  double trace = 0.0;
  double rmse = 0.0;
  int observed = 0;  // facets in the fused batch
};

struct ExecutedPiece {
  double start_time = 0.0;
  double duration = 0.0;  // executed part, <= trajectory total time
  Trajectory trajectory;
};

struct HorizonRecord {
  double start_time = 0.0;
  double duration = 0.0;
  double plan_seconds = 0.0;
  double initial_utility = 0.0;
  double utility = 0.0;
  int waypoints = 0;
};

struct MissionLog {
  std::vector<MissionEvent> events;  // the first is the prior at t = 0
  std::vector<ExecutedPiece> path;
  std::vector<HorizonRecord> horizons;
  FieldMap initial_map;
  FieldMap final_map;
  double elapsed = 0.0;  // mission time flown
  double wall_seconds = 0.0;
  int collision_samples = 0;  // executed samples closer than the vehicle radius
};

struct MissionOptions {
  PlannerKind kind = PlannerKind::ipp;
  std::uint64_t seed = 1;        // planner and measurement streams
  std::uint64_t truth_seed = 1;  // ground-truth field
  std::shared_ptr<const Eigen::MatrixXd> prior_override;  // replaces the mGP prior
};

/// Receding-horizon mission: plan, fly, measure at the global sensor clock
/// (t = k / freq, k >= 1), fuse, repeat until the budget is spent. The last
/// plan is cut at the budget; no measurement is taken after it.
MissionLog run_mission(const Scenario& scenario, const MissionOptions& opts);
MissionLog run_mission(const Scenario& scenario, PlannerKind kind, std::uint64_t seed);

/// metrics CSV: t, trace, rmse, x, y, z, yaw, observed.
void write_metrics_csv(const MissionLog& log, const std::filesystem::path& path);
/// Executed path sampled at rate_hz on the mission clock.
void write_path_csv(const MissionLog& log, const std::filesystem::path& path, double rate_hz);

/// Linear interpolation of a log column onto times; values past the last
/// event hold the last value.
std::vector<double> interpolate_events(const std::vector<MissionEvent>& events,
                                       const std::vector<double>& times, bool use_trace);

}  // namespace surfipp
