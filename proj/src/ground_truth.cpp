#include "surfipp/ground_truth.hpp"

#include <cmath>
#include <random>

#include "surfipp/io_util.hpp"

namespace surfipp {

void GroundTruthSpec::validate() const {
  for (const auto& s : sources) {
    if (!(s.width > 0)) throw ConfigError("ground_truth.sources[].width must be > 0");
  }
  if (random_sources < 0) throw ConfigError("ground_truth.random_sources must be >= 0");
  if (random_sources > 0) {
    if (!(width_min > 0) || width_max < width_min) {
      throw ConfigError("ground_truth.width_min/width_max must satisfy 0 < min <= max");
    }
    if (amplitude_max < amplitude_min) {
      throw ConfigError("ground_truth.amplitude_min must not exceed amplitude_max");
    }
  }
}

GroundTruthField generate_field(const SurfaceMesh& mesh, const GeodesicField& geo,
                                const GroundTruthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto n = mesh.num_facets();
  if (geo.size() != n) throw Error("geodesic field does not match the mesh");

  GroundTruthField out;
  out.ambient = spec.ambient;
  out.sources = spec.sources;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
  std::uniform_real_distribution<double> amp(spec.amplitude_min, spec.amplitude_max);
  std::uniform_real_distribution<double> width(spec.width_min, spec.width_max);
  std::bernoulli_distribution sign(0.5);
  for (int k = 0; k < spec.random_sources; ++k) {
    HeatSource s;
    s.facet = pick(rng);
    s.amplitude = amp(rng);
    s.width = width(rng);
    if (spec.random_sign && sign(rng)) s.amplitude = -s.amplitude;
    out.sources.push_back(s);
  }
  for (const auto& s : out.sources) {
    if (s.facet < 0 || static_cast<std::size_t>(s.facet) >= n) {
      throw ConfigError("ground_truth source facet " + std::to_string(s.facet) + " out of range");
    }
  }

  out.values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), spec.ambient);
  for (const auto& s : out.sources) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = geo.dist(static_cast<Eigen::Index>(i), s.facet);
      out.values[static_cast<Eigen::Index>(i)] +=
          s.amplitude * std::exp(-d * d / (2.0 * s.width * s.width));
    }
  }
  return out;
}

double lipschitz_bound(const GroundTruthField& truth) {
  double l = 0.0;
  for (const auto& s : truth.sources) l += std::abs(s.amplitude) * std::exp(-0.5) / s.width;
  return l;
}

double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) {
    throw Error("rmse: dimension mismatch (" + std::to_string(estimate.size()) + " vs " +
                std::to_string(truth.size()) + ")");
  }
  if (truth.size() == 0) throw Error("rmse of an empty field");
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(truth.size()));
}

double rmse(const FieldMap& map, const GroundTruthField& truth) {
  return rmse(map.mean, truth.values);
}

void write_field_csv(const GroundTruthField& truth, const std::filesystem::path& path) {
  CsvWriter csv(path, {"facet_index", "value"});
  for (Eigen::Index i = 0; i < truth.values.size(); ++i) {
    csv.row({std::to_string(i), fmt_num(truth.values[i], 17)});
  }
}

GroundTruthField read_field_csv(const std::filesystem::path& path, std::size_t num_facets) {
  const CsvTable table = read_csv(path);
  const int ci = table.column("facet_index");
  const int cv = table.column("value");
  if (ci < 0 || cv < 0) throw Error(path.string() + ": expected columns facet_index,value");
  GroundTruthField out;
  out.values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(num_facets), std::nan(""));
  for (const auto& row : table.rows) {
    const double idx = row[static_cast<std::size_t>(ci)];
    if (idx < 0 || idx >= static_cast<double>(num_facets) || idx != std::floor(idx)) {
      throw Error(path.string() + ": facet index out of range");
    }
    out.values[static_cast<Eigen::Index>(idx)] = row[static_cast<std::size_t>(cv)];
  }
  if (!out.values.allFinite()) throw Error(path.string() + ": field does not cover every facet");
  return out;
}

}  // namespace surfipp
