#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "surfipp/surface_mesh.hpp"

namespace surfipp {

struct KernelParams {
  double sigma_f = 1.0;       // signal std-dev, field units
  double length_scale = 4.0;  // meters
  double jitter = 1e-6;       // variance added to the diagonal, field units^2

  void validate() const;
};

/// Geodesic Matern 3/2 covariance at distance d.
double matern32_geodesic(double d, const KernelParams& params);

/// Gaussian map over facet centers: mean vector and dense covariance.
struct FieldMap {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::uint64_t mesh_id = 0;

  std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
};

/// Measurements of a subset of facets. H is the 0/1 row selection of
/// facet_indices; R = diag(noise_vars).
struct ObservationBatch {
  std::vector<int> facet_indices;
  Eigen::VectorXd values;
  Eigen::VectorXd noise_vars;

  std::size_t size() const { return facet_indices.size(); }
  bool empty() const { return facet_indices.empty(); }
  void validate(std::size_t num_facets) const;
};

/// Kernel gram over all facet pairs plus jitter on the diagonal, made
/// positive semi-definite when needed: negative eigenvalues are clipped to
/// zero before the jitter is added. Throws if the most negative eigenvalue is
/// below -0.01 sigma_f^2.
Eigen::MatrixXd prior_covariance(const GeodesicField& geo, const KernelParams& params);

FieldMap init_map(const GeodesicField& geo, const KernelParams& params, double prior_mean,
                  std::uint64_t mesh_id = 0);

/// Closed-form GP regression of the prior against the batch (the
/// non-sequential reference for fuse()). The prior covariance is rebuilt
/// from geo and params; only the mean is taken from map0.
FieldMap batch_posterior(const FieldMap& map0, const ObservationBatch& obs,
                         const GeodesicField& geo, const KernelParams& params);

/// Kalman-form conditioning on a batch. An empty batch is a no-op.
FieldMap fuse(const FieldMap& map, const ObservationBatch& obs);

double trace_cov(const FieldMap& map);

/// CSV snapshot: facet_index, mean, variance.
void write_map_csv(const FieldMap& map, const std::filesystem::path& path);

}  // namespace surfipp
