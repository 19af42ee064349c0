#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

namespace surfipp {

struct CmaesOptions {
  int lambda = 0;  // 0 selects 4 + floor(3 ln dim)
  int max_iterations = 50;
  double sigma0 = 1.0;
  std::uint64_t seed = 1;
  // Box bounds; empty means unbounded. Infeasible samples are evaluated at
  // their projection and penalized by the squared distance to it.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double bound_penalty = 1e3;
  double tol_sigma = 1e-9;  // stop once sigma * max stddev falls below this
};

struct CmaesResult {
  Eigen::VectorXd best_x;  // always inside the bounds
  double best_value = 0.0;
  int evaluations = 0;
  int iterations = 0;
};

int cmaes_default_lambda(int dim);

/// Maximizes f with (mu/mu_w, lambda)-CMA-ES. x0 is evaluated first, so the
/// result is never worse than the projected start.
CmaesResult cmaes_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x0, const CmaesOptions& opts);

}  // namespace surfipp
