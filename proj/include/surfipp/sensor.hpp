#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "surfipp/common.hpp"
#include "surfipp/field_map.hpp"
#include "surfipp/surface_mesh.hpp"
#include "surfipp/world.hpp"

namespace surfipp {

/// Fixed-mount camera. Angles in degrees; positive pitch tilts the optical
/// axis below the horizon.
struct CameraModel {
  double fov_h = 60.0;
  double fov_v = 60.0;
  double d_min = 2.0;
  double d_max = 8.0;
  double alpha_max = 70.0;
  double pitch = 15.0;
  double noise_a = 0.05;
  double noise_b = 0.2;
  bool occlusion_check = false;
  // Occlusion rays end this far in front of the facet (along its normal)
  // and must keep this clearance from the surface.
  double occlusion_offset = 1.0;
  double occlusion_clearance = 0.25;
  double occlusion_step = 0.25;

  void validate() const;
};

/// Camera-frame quantities of a facet center as seen from a viewpoint.
struct FacetView {
  double distance = 0.0;   // m
  double azimuth = 0.0;    // rad, left positive
  double elevation = 0.0;  // rad, up positive
  double incidence = 0.0;  // rad, between outward normal and facet-to-camera
  bool in_front = false;
};
FacetView view_facet(const Viewpoint& vp, const CameraModel& cam, const Vec3& center,
                     const Vec3& normal);

/// Facets satisfying the frustum, range, incidence and (optionally)
/// line-of-sight conditions, in ascending index order.
std::vector<int> visible_facets(const Viewpoint& vp, const CameraModel& cam,
                                const SurfaceMesh& mesh, const WorldModel& world);

/// a (1 - exp(-b d)).
double noise_variance(double d, const CameraModel& cam);

/// A measurement's geometry: visible facets and their noise variances.
/// Enough for covariance-only updates.
struct ObservationGeometry {
  std::vector<int> facets;
  std::vector<double> noise_vars;

  bool empty() const { return facets.empty(); }
};
ObservationGeometry observe(const Viewpoint& vp, const CameraModel& cam, const SurfaceMesh& mesh,
                            const WorldModel& world);

/// Per-facet ground truth values (piecewise constant over facets).
struct GroundTruthField;

/// Noisy readings of every visible facet; std::nullopt when nothing is
/// visible. Deterministic in rng_seed.
std::optional<ObservationBatch> simulate_measurement(const Viewpoint& vp,
                                                     const GroundTruthField& truth,
                                                     const CameraModel& cam,
                                                     const SurfaceMesh& mesh,
                                                     const WorldModel& world,
                                                     std::uint64_t rng_seed);

/// Evenly spaced yaw candidates 2 pi k / bins, wrapped to (-pi, pi] and sorted.
std::vector<double> yaw_candidates(int yaw_bins);

/// For each position, the candidate yaw that sees the most facets; ties go
/// to the smallest yaw.
std::vector<double> build_yaw_library(std::span<const Vec3> positions, const CameraModel& cam,
                                      const SurfaceMesh& mesh, const WorldModel& world,
                                      int yaw_bins);

/// Best-yaw lookup over space: build_yaw_library evaluated on a regular
/// lattice, queried by nearest lattice node.
class YawField {
 public:
  YawField(const WorldModel& world, const CameraModel& cam, const SurfaceMesh& mesh,
           double spacing, int yaw_bins, double min_clearance);

  double lookup(const Vec3& p) const;
  double spacing() const { return spacing_; }

 private:
  Vec3 origin_;
  double spacing_;
  std::array<int, 3> dims_{};
  std::vector<double> yaws_;
};

}  // namespace surfipp
