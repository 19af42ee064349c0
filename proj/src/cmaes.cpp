#include "surfipp/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "surfipp/common.hpp"

namespace surfipp {

int cmaes_default_lambda(int dim) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

CmaesResult cmaes_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x0, const CmaesOptions& opts) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw Error("cmaes: empty decision vector");
  if (!(opts.sigma0 > 0)) throw ConfigError("cma.sigma0 must be > 0");
  const bool bounded = opts.lower.size() == n && opts.upper.size() == n;
  if ((opts.lower.size() != 0 || opts.upper.size() != 0) && !bounded) {
    throw Error("cmaes: bound dimension mismatch");
  }
  const int lambda = opts.lambda > 0 ? opts.lambda : cmaes_default_lambda(n);
  if (lambda < 4) throw ConfigError("cma.lambda must be >= 4");

  auto project = [&](const VectorXd& x) -> VectorXd {
    return bounded ? VectorXd(x.cwiseMax(opts.lower).cwiseMin(opts.upper)) : x;
  };

  CmaesResult res;
  res.best_x = project(x0);
  res.best_value = f(res.best_x);
  res.evaluations = 1;

  // Strategy parameters (Hansen, "The CMA Evolution Strategy: A Tutorial").
  const int mu = lambda / 2;
  VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();
  const double dn = n;
  const double cc = (4 + mueff / dn) / (dn + 4 + 2 * mueff / dn);
  const double cs = (mueff + 2) / (dn + mueff + 5);
  const double c1 = 2 / ((dn + 1.3) * (dn + 1.3) + mueff);
  const double cmu = std::min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((dn + 2) * (dn + 2) + mueff));
  const double damps = 1 + 2 * std::max(0.0, std::sqrt((mueff - 1) / (dn + 1)) - 1) + cs;
  const double chin = std::sqrt(dn) * (1 - 1 / (4 * dn) + 1 / (21 * dn * dn));

  VectorXd mean = res.best_x;
  double sigma = opts.sigma0;
  VectorXd pc = VectorXd::Zero(n), ps = VectorXd::Zero(n);
  MatrixXd C = MatrixXd::Identity(n, n), B = MatrixXd::Identity(n, n);
  VectorXd D = VectorXd::Ones(n);
  MatrixXd invsqrtC = MatrixXd::Identity(n, n);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<VectorXd> xs(static_cast<std::size_t>(lambda));
  std::vector<double> fitness(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));

  for (int gen = 0; gen < opts.max_iterations; ++gen) {
    for (int k = 0; k < lambda; ++k) {
      VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      VectorXd x = mean + sigma * (B * D.asDiagonal() * z);
      const VectorXd xp = project(x);
      const double raw = f(xp);
      ++res.evaluations;
      if (raw > res.best_value) {
        res.best_value = raw;
        res.best_x = xp;
      }
      // Internally minimized.
      fitness[static_cast<std::size_t>(k)] =
          -raw + opts.bound_penalty * (x - xp).squaredNorm();
      xs[static_cast<std::size_t>(k)] = std::move(x);
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[a] < fitness[b]; });

    const VectorXd old = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += weights[i] * xs[static_cast<std::size_t>(order[i])];

    const VectorXd step = (mean - old) / sigma;
    ps = (1 - cs) * ps + std::sqrt(cs * (2 - cs) * mueff) * (invsqrtC * step);
    const double gens = gen + 1.0;
    const bool hsig = ps.norm() / std::sqrt(1 - std::pow(1 - cs, 2 * gens)) / chin <
                      1.4 + 2 / (dn + 1);
    pc = (1 - cc) * pc + (hsig ? std::sqrt(cc * (2 - cc) * mueff) : 0.0) * step;

    MatrixXd artmp(n, mu);
    for (int i = 0; i < mu; ++i) artmp.col(i) = (xs[static_cast<std::size_t>(order[i])] - old) / sigma;
    C = (1 - c1 - cmu) * C + c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2 - cc)) * C) +
        cmu * artmp * weights.asDiagonal() * artmp.transpose();
    sigma *= std::exp((cs / damps) * (ps.norm() / chin - 1));

    C = 0.5 * (C + C.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) break;
    B = eig.eigenvectors();
    D = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
    invsqrtC = B * D.cwiseInverse().asDiagonal() * B.transpose();
    res.iterations = gen + 1;

    if (!std::isfinite(sigma) || sigma * D.maxCoeff() < opts.tol_sigma) break;
  }
  return res;
}

}  // namespace surfipp
