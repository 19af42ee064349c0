#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "surfipp/cmaes.hpp"
#include "surfipp/field_map.hpp"
#include "surfipp/sensor.hpp"
#include "surfipp/surface_mesh.hpp"
#include "surfipp/trajectory.hpp"
#include "surfipp/world.hpp"

namespace surfipp {

struct LibraryParams {
  std::string mode = "lattice";  // lattice | shell
  double d_view = 4.0;           // offset from the surface, meters
  // lattice: rings around the vertical axis through the centroid
  int rings = 12;
  int levels = 5;
  // shell: rejection-sampled points with |distance - d_view| <= tolerance
  int shell_count = 80;
  double shell_tolerance = 0.5;
  double shell_min_spacing = 3.0;
  int shell_max_attempts = 200000;
  std::uint64_t shell_seed = 7;
  int yaw_bins = 16;
  double yaw_grid_spacing = 1.5;

  void validate(const CameraModel& cam) const;
};

/// Candidate viewpoints with their visibility precomputed.
struct ViewpointLibrary {
  std::vector<Viewpoint> viewpoints;
  std::vector<ObservationGeometry> observations;  // per viewpoint
  std::vector<int> levels;                        // height band per viewpoint
  double spacing = 0.0;                           // mean nearest-neighbor distance

  std::size_t size() const { return viewpoints.size(); }
};

/// Offset-shell library. Positions closer than min_clearance to the mesh or
/// seeing no facet are dropped; throws if none remain.
ViewpointLibrary build_library(const SurfaceMesh& mesh, const CameraModel& cam,
                               const WorldModel& world, const LibraryParams& params,
                               double min_clearance);

/// Observations sharing facets merged into one: repeated readings of a facet
/// with independent noise are equivalent to a single reading whose inverse
/// variance is the sum of the inverses.
struct PooledObservation {
  std::vector<int> facets;  // ascending
  Eigen::VectorXd noise_vars;

  bool empty() const { return facets.empty(); }
};
PooledObservation pool_observations(std::span<const ObservationGeometry> obs);

/// Trace reduction of a covariance under covariance-only conditioning.
///
/// For pooled facets A with noise D, the reduction is
/// tr((P_AA + D)^-1 (P P)_AA); P P is formed once so each query is
/// independent of the map size.
class GainModel {
 public:
  explicit GainModel(Eigen::MatrixXd cov);

  double gain(const PooledObservation& obs) const;
  double gain(std::span<const ObservationGeometry> obs) const {
    return gain(pool_observations(obs));
  }
  double trace() const { return cov_.trace(); }
  std::size_t size() const { return static_cast<std::size_t>(cov_.rows()); }

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd cov_sq_;
};

/// Tr(P) - Tr(P+) after conditioning on every viewpoint's visible facets.
double info_gain(const FieldMap& map, const std::vector<Viewpoint>& vps, const CameraModel& cam,
                 const SurfaceMesh& mesh, const WorldModel& world);

struct LosParams {
  double clearance = 0.6;
  double step = 0.25;
};

struct GreedyResult {
  std::vector<Viewpoint> waypoints;  // start first
  std::vector<int> indices;          // library index per pick
  std::vector<double> efficiencies;  // gain / travel time per pick
};

/// Sequential greedy waypoint search: n picks maximizing gain per travel
/// time, each in line of sight of the previous one, conditioning the
/// covariance after every pick. Zero-time candidates are skipped and ties
/// go to the lowest index.
GreedyResult greedy_search(const GainModel& gains, const Viewpoint& start,
                           const ViewpointLibrary& lib, int n, const WorldModel& world,
                           const DynamicsLimits& lim, const LosParams& los);
GreedyResult greedy_search(const FieldMap& map, const Viewpoint& start,
                           const ViewpointLibrary& lib, int n, const WorldModel& world,
                           const DynamicsLimits& lim, const LosParams& los);

struct CmaConfig {
  int lambda = 0;  // 0: 4 + floor(3 ln dim)
  int max_iterations = 50;
  double sigma0_fraction = 0.25;  // of the library spacing
};

struct PlannerConfig {
  int N = 4;  // control waypoints per horizon, start included
  int order = 12;
  double duration_safety = 1.1;
  double w_coll = 100.0;
  CmaConfig cma;
  double budget = 120.0;          // seconds
  double measurement_freq = 0.2;  // Hz
  double los_margin = -1.0;       // added to the vehicle radius; < 0 uses the sample step
  double sample_step = -1.0;      // LoS/collision sampling; < 0 uses min(voxel, r) / 2
  int start_index = 0;            // library viewpoint the mission starts from

  void validate() const;
  TrajectoryOptions trajectory_options() const { return {order, duration_safety}; }
};

/// Everything the horizon objective needs.
struct HorizonContext {
  const GainModel* gains = nullptr;
  const CameraModel* cam = nullptr;
  const SurfaceMesh* mesh = nullptr;
  const WorldModel* world = nullptr;
  const YawField* yaw_field = nullptr;
  DynamicsLimits lim;
  TrajectoryOptions traj;
  double w_coll = 100.0;
  double sample_step = 0.25;
  double measurement_freq = 0.2;
  double measurement_offset = 0.0;  // time of the first measurement on the horizon
};

struct HorizonValue {
  double utility = 0.0;  // info + collision
  double info_rate = 0.0;
  double collision = 0.0;
  double duration = 0.0;
};

/// Time-averaged gain of the measurements taken along the polynomial
/// trajectory through the waypoints, plus the collision penalty.
HorizonValue horizon_objective(const std::vector<Viewpoint>& waypoints, const HorizonContext& ctx);

struct RefineResult {
  std::vector<Viewpoint> waypoints;
  double initial_utility = 0.0;
  double utility = 0.0;
  int evaluations = 0;
};

/// CMA-ES over the positions of waypoints 2..N inside the world box; yaws
/// come from the yaw field. Never returns a plan worse than C0.
RefineResult refine_cmaes(const std::vector<Viewpoint>& c0, const HorizonContext& ctx,
                          const CmaConfig& cma, double library_spacing, std::uint64_t seed);

}  // namespace surfipp
