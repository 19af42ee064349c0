#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "surfipp/common.hpp"
#include "surfipp/surface_mesh.hpp"

namespace surfipp {

class Trajectory;

/// Unsigned distance field sampled on a regular grid of voxel centers.
///
/// Voxel (i, j, k) sits at origin + voxel * (i, j, k); queries between
/// centers are trilinear. Points outside the sampled box are free space.
class WorldModel {
 public:
  WorldModel(Vec3 origin, double voxel, std::array<int, 3> dims, std::vector<double> values,
             double margin);

  const Vec3& origin() const { return origin_; }
  double voxel() const { return voxel_; }
  const std::array<int, 3>& dims() const { return dims_; }
  double margin() const { return margin_; }
  Vec3 upper() const;

  double value(int i, int j, int k) const {
    return values_[(static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i];
  }
  bool contains(const Vec3& p) const;

 private:
  Vec3 origin_;
  double voxel_;
  std::array<int, 3> dims_;
  std::vector<double> values_;
  double margin_;
};

/// Exact Euclidean distance from p to triangle abc.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Brute-force minimum over all mesh triangles.
double mesh_distance(const SurfaceMesh& mesh, const Vec3& p);

/// Samples the exact point-to-mesh distance over the mesh bounding box
/// inflated by `margin`. Throws if the grid would exceed `max_voxels`.
WorldModel build_world(const SurfaceMesh& mesh, double voxel, double margin,
                       std::size_t max_voxels = 64u << 20);

/// Trilinear distance; +inf outside the grid.
double distance_at(const WorldModel& w, const Vec3& p);

/// True iff every sample along ab, spaced at most `step` apart with both
/// endpoints included, has distance_at >= clearance.
bool line_of_sight(const WorldModel& w, const Vec3& a, const Vec3& b, double clearance,
                   double step);

/// Number of trajectory samples (spaced <= step along the path) closer than r.
int count_collisions(const WorldModel& w, const Trajectory& traj, double r, double step);

/// w_coll times the negated collision sample count; always <= 0.
double collision_penalty(const WorldModel& w, const Trajectory& traj, double r, double w_coll,
                         double step);

/// Debug dump of a horizontal slice: x, y, distance.
void write_distance_slice_csv(const WorldModel& w, double z, const std::filesystem::path& path);

}  // namespace surfipp
