#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "surfipp/field_map.hpp"
#include "surfipp/surface_mesh.hpp"

namespace surfipp {

struct HeatSource {
  int facet = 0;
  double amplitude = 1.0;
  double width = 3.0;  // geodesic std-dev, meters
};

/// Sum of geodesic Gaussian bumps over an ambient level. Explicit sources
/// are used as given; `random_sources` more are drawn from the seed.
struct GroundTruthSpec {
  double ambient = 0.0;
  std::vector<HeatSource> sources;
  int random_sources = 0;
  double amplitude_min = 0.5;
  double amplitude_max = 2.0;
  bool random_sign = true;
  double width_min = 2.0;
  double width_max = 5.0;

  void validate() const;
};

struct GroundTruthField {
  Eigen::VectorXd values;
  std::vector<HeatSource> sources;  // all sources used, explicit first
  double ambient = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

GroundTruthField generate_field(const SurfaceMesh& mesh, const GeodesicField& geo,
                                const GroundTruthSpec& spec, std::uint64_t seed);

/// Geodesic Lipschitz bound of the generated field: sum |A| e^{-1/2} / w.
double lipschitz_bound(const GroundTruthField& truth);

double rmse(const FieldMap& map, const GroundTruthField& truth);
double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

/// CSV with columns facet_index, value.
void write_field_csv(const GroundTruthField& truth, const std::filesystem::path& path);
GroundTruthField read_field_csv(const std::filesystem::path& path, std::size_t num_facets);

}  // namespace surfipp
