#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "surfipp/common.hpp"

namespace surfipp {

/// Watertight triangle mesh with per-facet geometry.
///
/// Facet winding is made consistent by flood fill and then flipped globally
/// so that the majority of normals point away from the area-weighted
/// centroid. Zero-area facets are dropped with a warning. Construction
/// rejects out-of-range or repeated indices, non-manifold edges and
/// disconnected facet graphs.
class SurfaceMesh {
 public:
  using Facet = std::array<int, 3>;

  SurfaceMesh(std::vector<Vec3> vertices, std::vector<Facet> facets);

  std::size_t num_facets() const { return facets_.size(); }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const std::vector<Vec3>& centers() const { return centers_; }
  const std::vector<Vec3>& normals() const { return normals_; }
  const std::vector<double>& areas() const { return areas_; }
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }

  /// Area-weighted centroid of the facet centers.
  const Vec3& centroid() const { return centroid_; }
  Vec3 bbox_min() const;
  Vec3 bbox_max() const;

  /// 64-bit FNV-1a over the facet vertex coordinates; identifies the mesh
  /// for caches and map snapshots.
  std::uint64_t content_hash() const { return hash_; }

 private:
  void orient_facets();

  std::vector<Vec3> vertices_;
  std::vector<Facet> facets_;
  std::vector<Vec3> centers_;
  std::vector<Vec3> normals_;
  std::vector<double> areas_;
  std::vector<std::vector<int>> adjacency_;
  Vec3 centroid_ = Vec3::Zero();
  std::uint64_t hash_ = 0;
};

/// All-pairs geodesic distances between facet centers (n x n, meters).
struct GeodesicField {
  Eigen::MatrixXd dist;

  std::size_t size() const { return static_cast<std::size_t>(dist.rows()); }
};

/// Reads ASCII OBJ (v/f records) or ASCII STL. Binary STL is rejected.
SurfaceMesh load_mesh(const std::filesystem::path& path);

/// Writes the mesh as ASCII OBJ with round-trip exact coordinates.
void save_obj(const SurfaceMesh& mesh, const std::filesystem::path& path);

/// Closed tank: side wall, flat bottom disk and a spherical-cap dome.
/// The grid resolution is chosen so that the facet count is as close as
/// possible to target_facets.
SurfaceMesh generate_cylinder_tank(double radius, double height, double dome_height,
                                   int target_facets);

/// Non-convex composite: a prismatic fuselage along +x with two
/// rectangular wing slabs attached conformingly to its flat side faces.
struct AirplaneShape {
  double fuselage_length = 30.0;
  double fuselage_radius = 3.0;
  int fuselage_sides = 12;  // must be a multiple of 4
  int fuselage_segments = 20;
  double wing_root_start = 10.0;  // x of the leading edge, snapped to the segment grid
  int wing_chord_segments = 6;
  double wing_span = 10.0;
  int wing_span_segments = 6;
};
SurfaceMesh generate_airplane(const AirplaneShape& shape);

/// Shortest paths on the facet-center graph (edge weight = center distance).
GeodesicField compute_geodesics(const SurfaceMesh& mesh);

/// Same computation on an explicit graph. Throws Error naming an
/// unreachable pair if the graph is disconnected.
GeodesicField geodesics_from_graph(std::span<const Vec3> centers,
                                   const std::vector<std::vector<int>>& adjacency);

/// Loads the geodesic table from `cache_dir` if a sidecar for this mesh
/// exists, otherwise computes and writes it.
GeodesicField compute_geodesics_cached(const SurfaceMesh& mesh,
                                       const std::filesystem::path& cache_dir);

/// Binary square-matrix sidecar: 8-byte magic, uint64 n, then n*n
/// little-endian doubles in row-major order.
void save_matrix_binary(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd load_matrix_binary(const std::filesystem::path& path);

}  // namespace surfipp
