#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "surfipp/field_map.hpp"
#include "surfipp/io_util.hpp"
#include "test_util.hpp"

using namespace surfipp;
using surfipp::testing::random_spd;
using surfipp::testing::rel_err;

namespace {

GeodesicField chain_geodesics(int n, double spacing) {
  GeodesicField g;
  g.dist.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.dist(i, j) = spacing * std::abs(i - j);
  return g;
}

// Random path-metric geodesics on n points.
GeodesicField random_tree_geodesics(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> len(0.3, 2.5);
  std::vector<int> parent(n, -1);
  std::vector<double> w(n, 0.0);
  for (int i = 1; i < n; ++i) {
    parent[i] = std::uniform_int_distribution<int>(0, i - 1)(rng);
    w[i] = len(rng);
  }
  auto depth_path = [&](int i) {
    std::vector<std::pair<int, double>> up;  // node, distance from i
    double d = 0;
    for (int v = i; v >= 0; v = parent[v]) {
      up.push_back({v, d});
      d += w[v];
    }
    return up;
  };
  GeodesicField g;
  g.dist = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto ui = depth_path(i);
    for (int j = 0; j < n; ++j) {
      const auto uj = depth_path(j);
      double best = 0;
      bool found = false;
      for (const auto& [a, da] : ui) {
        for (const auto& [b, db] : uj) {
          if (a == b && !found) {
            best = da + db;
            found = true;
          }
        }
      }
      g.dist(i, j) = best;
    }
  }
  return g;
}

ObservationBatch random_batch(int n, int m, std::mt19937_64& rng) {
  ObservationBatch b;
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> noise(0.01, 0.5);
  std::normal_distribution<double> val(0.0, 1.0);
  b.values.resize(m);
  b.noise_vars.resize(m);
  for (int k = 0; k < m; ++k) {
    b.facet_indices.push_back(pick(rng));
    b.values[k] = val(rng);
    b.noise_vars[k] = noise(rng);
  }
  return b;
}

// GP regression written out with explicit inverses.
FieldMap gp_reference(const Eigen::MatrixXd& k, const Eigen::VectorXd& mu0,
                      const std::vector<ObservationBatch>& parts) {
  std::vector<int> idx;
  std::vector<double> y, r;
  for (const auto& b : parts) {
    for (std::size_t k2 = 0; k2 < b.size(); ++k2) {
      idx.push_back(b.facet_indices[k2]);
      y.push_back(b.values[k2]);
      r.push_back(b.noise_vars[k2]);
    }
  }
  const int n = static_cast<int>(k.rows());
  const int m = static_cast<int>(idx.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, n);
  for (int a = 0; a < m; ++a) h(a, idx[a]) = 1.0;
  Eigen::MatrixXd s = h * k * h.transpose();
  for (int a = 0; a < m; ++a) s(a, a) += r[a];
  const Eigen::MatrixXd s_inv = s.inverse();
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), m);
  FieldMap out;
  out.mean = mu0 + k * h.transpose() * s_inv * (yv - h * mu0);
  out.cov = k - k * h.transpose() * s_inv * h * k;
  return out;
}

}  // namespace

TEST(Kernel, ClosedFormValues) {
  KernelParams p{1.0, 5.0, 0.0};
  EXPECT_DOUBLE_EQ(matern32_geodesic(0.0, p), 1.0);
  const double expect_l = (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
  EXPECT_NEAR(expect_l, 0.4833577, 1e-7);
  EXPECT_NEAR(matern32_geodesic(5.0, p), expect_l, 1e-12);
  EXPECT_LT(matern32_geodesic(500.0, p), 1e-60);
  KernelParams q{2.0, 3.0, 0.0};
  for (double d : {0.0, 1.5, 3.0, 9.0}) {
    const double r = std::sqrt(3.0) * d / 3.0;
    EXPECT_NEAR(matern32_geodesic(d, q), 4.0 * (1 + r) * std::exp(-r), 1e-12);
  }
  double prev = matern32_geodesic(0.0, q);
  for (double d = 0.1; d < 30; d += 0.1) {
    const double v = matern32_geodesic(d, q);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Kernel, ParamsValidate) {
  EXPECT_THROW((KernelParams{0.0, 1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((KernelParams{1.0, -1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((KernelParams{1.0, 1.0, -1e-3}.validate()), ConfigError);
}

TEST(InitMap, SingleFacet) {
  GeodesicField g;
  g.dist = Eigen::MatrixXd::Zero(1, 1);
  const FieldMap m = init_map(g, {1.5, 2.0, 1e-3}, 0.25);
  EXPECT_DOUBLE_EQ(m.cov(0, 0), 2.25 + 1e-3);
  EXPECT_DOUBLE_EQ(m.mean[0], 0.25);
}

TEST(InitMap, ChainOffDiagonal) {
  const FieldMap m = init_map(chain_geodesics(3, 1.0), {1.0, 1.0, 0.0}, 0.0);
  EXPECT_NEAR(m.cov(0, 1), 0.4833577, 1e-7);
  EXPECT_NEAR(m.cov(0, 1), (1 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0)), 1e-15);
  EXPECT_DOUBLE_EQ(m.cov(0, 0), 1.0);
}

TEST(InitMap, TraceEqualsNSigmaSquaredWithoutJitter) {
  const FieldMap m = init_map(chain_geodesics(7, 0.5), {1.3, 2.0, 0.0}, 0.0);
  EXPECT_NEAR(trace_cov(m), 7 * 1.69, 1e-12);
}

TEST(InitMap, RepairedCylinderGramIsPsd) {
  for (int target : {400, 120}) {
    const SurfaceMesh mesh = generate_cylinder_tank(6, 20, 1.2, target);
    const GeodesicField geo = compute_geodesics(mesh);
    const KernelParams p{1.0, 4.0, 0.0};
    const FieldMap m = init_map(geo, p, 0.0);
    EXPECT_LE((m.cov - m.cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.cov, Eigen::EigenvaluesOnly);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(InitMap, AirplaneGramIsPsd) {
  const SurfaceMesh mesh = generate_airplane(AirplaneShape{});
  const FieldMap m = init_map(compute_geodesics(mesh), {1.0, 4.0, 0.0}, 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.cov, Eigen::EigenvaluesOnly);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
}

TEST(InitMap, PositiveDefiniteGramIsUnchanged) {
  const GeodesicField g = chain_geodesics(6, 0.7);
  const KernelParams p{1.0, 2.0, 1e-6};
  const FieldMap m = init_map(g, p, 0.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double k = matern32_geodesic(g.dist(i, j), p) + (i == j ? 1e-6 : 0.0);
      EXPECT_DOUBLE_EQ(m.cov(i, j), k);
    }
  }
}

TEST(BatchPosterior, ScalarCase) {
  GeodesicField g;
  g.dist = Eigen::MatrixXd::Zero(1, 1);
  const FieldMap prior = init_map(g, {1.0, 1.0, 0.0}, 0.0);
  ObservationBatch b{{0}, Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 1.0)};
  const FieldMap post = batch_posterior(prior, b, g, {1.0, 1.0, 0.0});
  EXPECT_NEAR(post.mean[0], 0.5, 1e-15);
  EXPECT_NEAR(post.cov(0, 0), 0.5, 1e-15);
}

TEST(BatchPosterior, InterpolatesWithVanishingNoise) {
  const int n = 6;
  const GeodesicField g = chain_geodesics(n, 1.0);
  const KernelParams p{1.0, 1.5, 0.0};
  const FieldMap prior = init_map(g, p, 0.0);
  ObservationBatch b;
  b.values.resize(n);
  b.noise_vars = Eigen::VectorXd::Constant(n, 1e-12);
  for (int i = 0; i < n; ++i) {
    b.facet_indices.push_back(i);
    b.values[i] = std::sin(i);
  }
  const FieldMap post = batch_posterior(prior, b, g, p);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(post.mean[i], std::sin(i), 1e-6);
    EXPECT_NEAR(post.cov(i, i), 0.0, 1e-6);
  }
}

TEST(BatchPosterior, SingularSystemThrows) {
  const GeodesicField g = chain_geodesics(3, 1.0);
  const KernelParams p{1.0, 1.0, 0.0};
  const FieldMap prior = init_map(g, p, 0.0);
  ObservationBatch b{{1, 1}, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  EXPECT_THROW(batch_posterior(prior, b, g, p), Error);
}

TEST(Fuse, ScalarCase) {
  FieldMap m{Eigen::VectorXd::Constant(1, 0.7), Eigen::MatrixXd::Constant(1, 1, 2.0)};
  ObservationBatch b{{0}, Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 2.0)};
  const FieldMap post = fuse(m, b);
  EXPECT_DOUBLE_EQ(post.mean[0], 0.7);
  EXPECT_DOUBLE_EQ(post.cov(0, 0), 1.0);
}

TEST(Fuse, HugeNoiseLeavesMapUnchanged) {
  std::mt19937_64 rng(3);
  const int n = 8;
  FieldMap m{Eigen::VectorXd::Random(n), random_spd(n, rng)};
  ObservationBatch b = random_batch(n, 5, rng);
  b.noise_vars.setConstant(1e12);
  const FieldMap post = fuse(m, b);
  EXPECT_LE(rel_err(post.cov, m.cov), 1e-6);
  EXPECT_LE((post.mean - m.mean).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, m.mean.norm()));
}

TEST(Fuse, EmptyBatchIsIdentity) {
  std::mt19937_64 rng(4);
  FieldMap m{Eigen::VectorXd::Random(5), random_spd(5, rng)};
  const FieldMap post = fuse(m, ObservationBatch{});
  EXPECT_EQ(post.mean, m.mean);
  EXPECT_EQ(post.cov, m.cov);
}

TEST(Fuse, RejectsInvalidBatches) {
  FieldMap m{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_THROW(fuse(m, ObservationBatch{{3}, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)}),
               Error);
  EXPECT_THROW(fuse(m, ObservationBatch{{0}, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(1)}),
               Error);
  EXPECT_THROW(
      fuse(m, ObservationBatch{{0}, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, -1)}),
      Error);
}

TEST(Fuse, SequentialSingleFacetFusionsMatchBatchPosterior) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 18;
    const GeodesicField g = random_tree_geodesics(n, rng);
    const KernelParams p{1.0 + 0.1 * (trial % 4), 1.0 + trial % 3, 1e-6};
    const FieldMap prior = init_map(g, p, 0.3);
    const ObservationBatch all = random_batch(n, 1 + trial % 12, rng);
    FieldMap seq = prior;
    std::vector<ObservationBatch> parts;
    for (std::size_t k = 0; k < all.size(); ++k) {
      ObservationBatch one{{all.facet_indices[k]}, all.values.segment(k, 1),
                           all.noise_vars.segment(k, 1)};
      seq = fuse(seq, one);
      parts.push_back(one);
    }
    const FieldMap batch = batch_posterior(prior, all, g, p);
    EXPECT_LE(rel_err(seq.cov, batch.cov), 1e-8);
    EXPECT_LE(rel_err(seq.mean, batch.mean), 1e-8);
    const FieldMap ref = gp_reference(prior.cov, prior.mean, parts);
    EXPECT_LE(rel_err(batch.cov, ref.cov), 1e-8);
    EXPECT_LE(rel_err(batch.mean, ref.mean), 1e-8);
  }
}

TEST(Fuse, SingleBatchFuseMatchesBatchPosteriorOnFiveFacets) {
  std::mt19937_64 rng(5);
  const GeodesicField g = random_tree_geodesics(5, rng);
  const KernelParams p{1.0, 2.0, 1e-6};
  const FieldMap prior = init_map(g, p, 0.0);
  const ObservationBatch b = random_batch(5, 4, rng);
  EXPECT_LE(rel_err(fuse(prior, b).cov, batch_posterior(prior, b, g, p).cov), 1e-8);
  EXPECT_LE(rel_err(fuse(prior, b).mean, batch_posterior(prior, b, g, p).mean), 1e-8);
}

TEST(Fuse, TraceNeverIncreasesAndCovarianceStaysSymmetric) {
  std::mt19937_64 rng(21);
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 19;
    FieldMap m{Eigen::VectorXd::Zero(n), random_spd(n, rng, 1e-3)};
    for (int step = 0; step < 5; ++step) {
      const double before = trace_cov(m);
      m = fuse(m, random_batch(n, 1 + step, rng));
      if (trace_cov(m) > before) ++violations;
      EXPECT_LE((m.cov - m.cov.transpose()).cwiseAbs().maxCoeff(),
                1e-9 * m.cov.cwiseAbs().maxCoeff());
      EXPECT_GE(m.cov.diagonal().minCoeff(), -1e-12);
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(Fuse, MeasuredVarianceBelowPriorAndNoise) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 10;
    FieldMap m{Eigen::VectorXd::Zero(n), random_spd(n, rng)};
    const ObservationBatch b = random_batch(n, 3, rng);
    const FieldMap post = fuse(m, b);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const int i = b.facet_indices[k];
      EXPECT_LE(post.cov(i, i), m.cov(i, i) + 1e-12);
      EXPECT_LE(post.cov(i, i), b.noise_vars[k] + 1e-9);
    }
  }
}

TEST(FieldMap, IdentityTraceAndCsvSnapshot) {
  FieldMap m{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_DOUBLE_EQ(trace_cov(m), 3.0);
  const auto dir = surfipp::testing::scratch_dir("map_csv");
  m.mean << 1.0, -0.5, 0.125;
  write_map_csv(m, dir / "map.csv");
  const CsvTable t = read_csv(dir / "map.csv");
  ASSERT_EQ(t.header, (std::vector<std::string>{"facet_index", "mean", "variance"}));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(t.rows[2][1], 0.125);
  EXPECT_DOUBLE_EQ(t.rows[1][2], 1.0);
}
