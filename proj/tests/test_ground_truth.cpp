#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "surfipp/ground_truth.hpp"
#include "test_util.hpp"

using namespace surfipp;

namespace {

const SurfaceMesh& tank() {
  static const SurfaceMesh m = generate_cylinder_tank(6, 20, 1.2, 400);
  return m;
}

const GeodesicField& tank_geo() {
  static const GeodesicField g = compute_geodesics(tank());
  return g;
}

}  // namespace

TEST(GroundTruth, NoSourcesIsAmbient) {
  GroundTruthSpec spec;
  spec.ambient = 21.5;
  const GroundTruthField f = generate_field(tank(), tank_geo(), spec, 3);
  EXPECT_EQ(f.size(), tank().num_facets());
  EXPECT_TRUE((f.values.array() == 21.5).all());
}

TEST(GroundTruth, SingleSourceAtSourceAndAtOneWidth) {
  GroundTruthSpec spec;
  spec.ambient = 10.0;
  spec.sources = {{37, 4.0, 2.5}};
  const GroundTruthField f = generate_field(tank(), tank_geo(), spec, 0);
  EXPECT_DOUBLE_EQ(f.values[37], 14.0);
  // Place the width at a realised geodesic distance.
  const int other = 120;
  const double d = tank_geo().dist(other, 37);
  spec.sources = {{37, 4.0, d}};
  const GroundTruthField g = generate_field(tank(), tank_geo(), spec, 0);
  EXPECT_NEAR(g.values[other], 10.0 + 4.0 * 0.60653065971263342, 1e-12);
  for (Eigen::Index i = 0; i < g.values.size(); ++i) {
    const double di = tank_geo().dist(i, 37);
    EXPECT_NEAR(g.values[i], 10.0 + 4.0 * std::exp(-di * di / (2 * d * d)), 1e-12);
  }
}

TEST(GroundTruth, DeterministicPerSeed) {
  GroundTruthSpec spec;
  spec.random_sources = 6;
  const auto a = generate_field(tank(), tank_geo(), spec, 11);
  const auto b = generate_field(tank(), tank_geo(), spec, 11);
  const auto c = generate_field(tank(), tank_geo(), spec, 12);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  ASSERT_EQ(a.sources.size(), 6u);
  for (const auto& s : a.sources) {
    EXPECT_GE(std::abs(s.amplitude), spec.amplitude_min);
    EXPECT_LE(std::abs(s.amplitude), spec.amplitude_max);
    EXPECT_GE(s.width, spec.width_min);
    EXPECT_LE(s.width, spec.width_max);
  }
}

TEST(GroundTruth, ExplicitSourcesComeFirst) {
  GroundTruthSpec spec;
  spec.sources = {{5, -1.0, 3.0}};
  spec.random_sources = 2;
  const auto f = generate_field(tank(), tank_geo(), spec, 2);
  ASSERT_EQ(f.sources.size(), 3u);
  EXPECT_EQ(f.sources[0].facet, 5);
  EXPECT_EQ(f.sources[0].amplitude, -1.0);
}

TEST(GroundTruth, GeodesicLipschitzBound) {
  GroundTruthSpec spec;
  spec.random_sources = 5;
  const GeodesicField& geo = tank_geo();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = generate_field(tank(), geo, spec, seed);
    const double l = lipschitz_bound(f);
    EXPECT_GT(l, 0.0);
    const auto n = f.values.size();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        ASSERT_LE(std::abs(f.values[i] - f.values[j]), l * geo.dist(i, j) + 1e-12);
      }
  }
}

TEST(GroundTruth, Validation) {
  GroundTruthSpec spec;
  spec.sources = {{0, 1.0, 0.0}};
  EXPECT_THROW(generate_field(tank(), tank_geo(), spec, 0), ConfigError);
  spec.sources = {{100000, 1.0, 1.0}};
  EXPECT_THROW(generate_field(tank(), tank_geo(), spec, 0), ConfigError);
  spec.sources.clear();
  spec.random_sources = 1;
  spec.width_min = 3;
  spec.width_max = 2;
  EXPECT_THROW(generate_field(tank(), tank_geo(), spec, 0), ConfigError);
  GeodesicField small{Eigen::MatrixXd::Zero(3, 3)};
  EXPECT_THROW(generate_field(tank(), small, GroundTruthSpec{}, 0), Error);
}

TEST(Rmse, Examples) {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(7, -1.0, 2.0);
  EXPECT_EQ(rmse(t, t), 0.0);
  EXPECT_NEAR(rmse(t.array() + 0.75, t), 0.75, 1e-15);
  EXPECT_NEAR(rmse(t.array() - 2.0, t), 2.0, 1e-15);
  Eigen::VectorXd mu(5), tr(5);
  mu << 1.0, 2.0, 3.0, 4.0, 5.0;
  tr << 1.5, 1.0, 3.0, 6.0, 4.0;
  // squared errors 0.25, 1, 0, 4, 1 -> mean 1.25
  EXPECT_NEAR(rmse(mu, tr), std::sqrt(1.25), 1e-15);
  FieldMap map{mu, Eigen::MatrixXd::Identity(5, 5)};
  GroundTruthField g;
  g.values = tr;
  EXPECT_NEAR(rmse(map, g), std::sqrt(1.25), 1e-15);
  EXPECT_THROW(rmse(mu, Eigen::VectorXd::Zero(4)), Error);
}

TEST(Rmse, PermutationInvariant) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    const int n = 3 + k;
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(rmse(a(perm), b(perm)), rmse(a, b), 1e-14);
  }
}

TEST(GroundTruth, CsvRoundTrip) {
  const auto dir = surfipp::testing::scratch_dir("truth");
  GroundTruthSpec spec;
  spec.random_sources = 4;
  spec.ambient = 0.3;
  const auto f = generate_field(tank(), tank_geo(), spec, 1);
  write_field_csv(f, dir / "t.csv");
  const auto back = read_field_csv(dir / "t.csv", tank().num_facets());
  EXPECT_EQ(back.values, f.values);
  EXPECT_THROW(read_field_csv(dir / "t.csv", tank().num_facets() + 1), Error);
  EXPECT_THROW(read_field_csv(dir / "t.csv", 10), Error);
}
