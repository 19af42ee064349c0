#include "surfipp/field_map.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "surfipp/io_util.hpp"
#include "surfipp/log.hpp"

namespace surfipp {

void KernelParams::validate() const {
  if (!(sigma_f > 0) || !std::isfinite(sigma_f)) throw ConfigError("kernel.sigma_f must be > 0");
  if (!(length_scale > 0) || !std::isfinite(length_scale)) {
    throw ConfigError("kernel.length_scale must be > 0");
  }
  if (!(jitter >= 0) || !std::isfinite(jitter)) throw ConfigError("kernel.jitter must be >= 0");
}

double matern32_geodesic(double d, const KernelParams& params) {
  const double r = std::sqrt(3.0) * d / params.length_scale;
  return params.sigma_f * params.sigma_f * (1.0 + r) * std::exp(-r);
}

void ObservationBatch::validate(std::size_t num_facets) const {
  const auto m = facet_indices.size();
  if (static_cast<std::size_t>(values.size()) != m ||
      static_cast<std::size_t>(noise_vars.size()) != m) {
    throw Error("observation batch has inconsistent lengths");
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (facet_indices[k] < 0 || static_cast<std::size_t>(facet_indices[k]) >= num_facets) {
      throw Error("observation facet index " + std::to_string(facet_indices[k]) +
                  " out of range");
    }
    if (!(noise_vars[k] >= 0) || !std::isfinite(noise_vars[k])) {
      throw Error("observation noise variance must be finite and >= 0");
    }
    if (!std::isfinite(values[k])) throw Error("observation value is not finite");
  }
}

Eigen::MatrixXd prior_covariance(const GeodesicField& geo, const KernelParams& params) {
  params.validate();
  const Eigen::Index n = geo.dist.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) k(i, j) = matern32_geodesic(geo.dist(i, j), params);
  }
  const double var = params.sigma_f * params.sigma_f;

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
    if (eig.info() != Eigen::Success) throw Error("kernel eigendecomposition failed");
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < 0) {
      log().debug("PSD repair: clipping eigenvalues down to {}", min_eig);
      const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
      k = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
      k = 0.5 * (k + k.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(k, Eigen::EigenvaluesOnly);
      const double repaired = check.eigenvalues().minCoeff();
      if (check.info() != Eigen::Success || repaired < -0.01 * var) {
        throw Error("PSD repair failed (min eigenvalue " + fmt_num(repaired) + ")");
      }
    }
  }
  k.diagonal().array() += params.jitter;
  return k;
}

FieldMap init_map(const GeodesicField& geo, const KernelParams& params, double prior_mean,
                  std::uint64_t mesh_id) {
  FieldMap map;
  map.cov = prior_covariance(geo, params);
  map.mean = Eigen::VectorXd::Constant(map.cov.rows(), prior_mean);
  map.mesh_id = mesh_id;
  return map;
}

FieldMap batch_posterior(const FieldMap& map0, const ObservationBatch& obs,
                         const GeodesicField& geo, const KernelParams& params) {
  const auto n = map0.size();
  if (geo.size() != n) throw Error("geodesic field does not match the map size");
  obs.validate(n);
  if (obs.empty()) throw Error("batch_posterior needs at least one observation");

  const Eigen::MatrixXd k = prior_covariance(geo, params);
  const auto& idx = obs.facet_indices;
  Eigen::MatrixXd k_xx = k(idx, idx);
  k_xx.diagonal() += obs.noise_vars;
  const Eigen::MatrixXd k_sx = k(Eigen::all, idx);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(k_xx);
  if (!lu.isInvertible()) throw Error("batch regression system is singular");
  const Eigen::VectorXd resid = obs.values - map0.mean(idx);

  FieldMap post;
  post.mesh_id = map0.mesh_id;
  post.mean = map0.mean + k_sx * lu.solve(resid);
  post.cov = k - k_sx * lu.solve(k_sx.transpose());
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  return post;
}

FieldMap fuse(const FieldMap& map, const ObservationBatch& obs) {
  obs.validate(map.size());
  if (obs.empty()) return map;
  const auto& idx = obs.facet_indices;

  const Eigen::MatrixXd hp = map.cov(idx, Eigen::all);  // H P, m x n
  Eigen::MatrixXd s = hp(Eigen::all, idx);
  s.diagonal() += obs.noise_vars;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw Error("innovation matrix is not positive definite");

  // With S = L L^T: P H^T S^-1 H P = W^T W, W = L^-1 H P.
  const Eigen::MatrixXd w = llt.matrixL().solve(hp);
  const Eigen::VectorXd z = llt.matrixL().solve(obs.values - map.mean(idx));

  FieldMap out;
  out.mesh_id = map.mesh_id;
  out.mean = map.mean + w.transpose() * z;
  out.cov = map.cov;
  out.cov.noalias() -= w.transpose() * w;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

double trace_cov(const FieldMap& map) { return map.cov.trace(); }

void write_map_csv(const FieldMap& map, const std::filesystem::path& path) {
  CsvWriter csv(path, {"facet_index", "mean", "variance"});
  for (Eigen::Index i = 0; i < map.mean.size(); ++i) {
    csv.row({std::to_string(i), fmt_num(map.mean[i]), fmt_num(map.cov(i, i))});
  }
}

}  // namespace surfipp
