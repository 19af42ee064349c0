#include "surfipp/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/LU>

#include "surfipp/io_util.hpp"

namespace surfipp {

void DynamicsLimits::validate() const {
  if (!(v_max > 0)) throw ConfigError("dynamics.v_max must be > 0");
  if (!(a_max > 0)) throw ConfigError("dynamics.a_max must be > 0");
  if (!(yaw_rate_max > 0)) throw ConfigError("dynamics.yaw_rate_max must be > 0");
  if (!(uav_radius > 0)) throw ConfigError("dynamics.uav_radius must be > 0");
}

double segment_time(const Viewpoint& from, const Viewpoint& to, const DynamicsLimits& lim) {
  const double d = (to.position - from.position).norm();
  double t_move = 0.0;
  if (d > 0) {
    const double d_ramp = lim.v_max * lim.v_max / lim.a_max;  // accelerate + decelerate
    t_move = d <= d_ramp ? 2.0 * std::sqrt(d / lim.a_max) : d / lim.v_max + lim.v_max / lim.a_max;
  }
  const double t_yaw = std::abs(wrap_angle(to.yaw - from.yaw)) / lim.yaw_rate_max;
  return std::max(t_move, t_yaw);
}

namespace {

double poly_eval(const Eigen::VectorXd& c, double x, int deriv) {
  double acc = 0.0;
  for (Eigen::Index i = c.size() - 1; i >= deriv; --i) {
    double f = 1.0;
    for (int k = 0; k < deriv; ++k) f *= static_cast<double>(i - k);
    acc = acc * x + f * c[i];
  }
  return acc;
}

// Max of |p^(deriv)| on [0, 1]: dense scan, then golden-section refinement.
double peak_abs(const Eigen::VectorXd& c, int deriv) {
  const int samples = 4000;
  int best = 0;
  double best_v = -1.0;
  for (int i = 0; i <= samples; ++i) {
    double v = std::abs(poly_eval(c, static_cast<double>(i) / samples, deriv));
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  double lo = std::max(0, best - 1) / static_cast<double>(samples);
  double hi = std::min(samples, best + 1) / static_cast<double>(samples);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double x) { return std::abs(poly_eval(c, x, deriv)); };
  for (int it = 0; it < 100; ++it) {
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    if (f(x1) > f(x2)) hi = x2;
    else lo = x1;
  }
  return std::max(best_v, f(0.5 * (lo + hi))) * (1.0 + 1e-9);
}

RestToRestProfile solve_profile(int order) {
  const int n = order + 1;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 4; i < n; ++i) {
    for (int j = 4; j < n; ++j) {
      double ci = static_cast<double>(i) * (i - 1) * (i - 2) * (i - 3);
      double cj = static_cast<double>(j) * (j - 1) * (j - 2) * (j - 3);
      q(i, j) = ci * cj / (i + j - 7);
    }
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(6);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  a(2, 2) = 2.0;
  for (int i = 0; i < n; ++i) {
    a(3, i) = 1.0;
    a(4, i) = i;
    a(5, i) = static_cast<double>(i) * (i - 1);
  }
  b(3) = 1.0;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 6, n + 6);
  kkt.topLeftCorner(n, n) = 2.0 * q;
  kkt.topRightCorner(n, 6) = a.transpose();
  kkt.bottomLeftCorner(6, n) = a;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 6);
  rhs.tail(6) = b;
  Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);

  RestToRestProfile p;
  p.coeffs = sol.head(n);
  p.coeffs.head(3).setZero();
  p.peak_velocity = peak_abs(p.coeffs, 1);
  p.peak_acceleration = peak_abs(p.coeffs, 2);
  return p;
}

}  // namespace

const RestToRestProfile& rest_to_rest_profile(int order) {
  if (order < 5) throw ConfigError("polynomial order must be >= 5");
  static std::mutex mu;
  static std::map<int, RestToRestProfile> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, solve_profile(order)).first;
  return it->second;
}

Trajectory::Trajectory(std::vector<Viewpoint> control_waypoints,
                       std::vector<TrajectorySegment> segments)
    : waypoints_(std::move(control_waypoints)), segments_(std::move(segments)) {
  if (segments_.empty()) throw Error("trajectory has no segments");
  starts_.reserve(segments_.size());
  for (const auto& s : segments_) {
    if (!(s.duration > 0)) throw Error("trajectory segment with non-positive duration");
    starts_.push_back(total_);
    total_ += s.duration;
  }
}

std::size_t Trajectory::locate(double t, double& local) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
  std::size_t i = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
  local = t - starts_[i];
  return i;
}

Vec3 Trajectory::position(double t) const {
  if (t <= 0) return segments_.front().start.position;
  if (t >= total_) return segments_.back().end.position;
  double tau = 0;
  const auto& s = segments_[locate(t, tau)];
  if (tau <= 0) return s.start.position;
  if (tau >= s.duration) return s.end.position;
  Vec3 p;
  for (int ax = 0; ax < 3; ++ax) p[ax] = poly_eval(s.coeffs.row(ax).transpose(), tau, 0);
  return p;
}

Vec3 Trajectory::velocity(double t) const {
  double tau = 0;
  const auto& s = segments_[locate(std::clamp(t, 0.0, total_), tau)];
  tau = std::clamp(tau, 0.0, s.duration);
  Vec3 v;
  for (int ax = 0; ax < 3; ++ax) v[ax] = poly_eval(s.coeffs.row(ax).transpose(), tau, 1);
  return v;
}

Vec3 Trajectory::acceleration(double t) const {
  double tau = 0;
  const auto& s = segments_[locate(std::clamp(t, 0.0, total_), tau)];
  tau = std::clamp(tau, 0.0, s.duration);
  Vec3 a;
  for (int ax = 0; ax < 3; ++ax) a[ax] = poly_eval(s.coeffs.row(ax).transpose(), tau, 2);
  return a;
}

double Trajectory::yaw(double t) const {
  if (t <= 0) return segments_.front().start.yaw;
  if (t >= total_) return segments_.back().end.yaw;
  double tau = 0;
  const auto& s = segments_[locate(t, tau)];
  if (tau <= 0) return s.start.yaw;
  if (tau >= s.duration) return s.end.yaw;
  return wrap_angle(s.start.yaw + s.yaw_delta * (tau / s.duration));
}

std::vector<double> Trajectory::sample_times(double step) const {
  if (!(step > 0)) throw Error("sample step must be > 0");
  std::vector<double> times{0.0};
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    const double length_bound = s.peak_speed * s.duration;
    std::size_t count = 1;
    while (static_cast<double>(count) * step < length_bound) count *= 2;
    for (std::size_t k = 1; k <= count; ++k) {
      times.push_back(starts_[i] + s.duration * static_cast<double>(k) / count);
    }
  }
  times.back() = total_;
  return times;
}

Trajectory plan_polynomial(const std::vector<Viewpoint>& waypoints, const DynamicsLimits& lim,
                           const TrajectoryOptions& opts) {
  if (waypoints.size() < 2) throw Error("trajectory needs at least 2 waypoints");
  if (!(opts.duration_safety >= 1.0)) throw ConfigError("planner.duration_safety must be >= 1");
  const auto& prof = rest_to_rest_profile(opts.order);
  const int n = static_cast<int>(prof.coeffs.size());

  std::vector<Viewpoint> kept{waypoints.front()};
  std::vector<TrajectorySegment> segs;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Viewpoint& from = kept.back();
    const Viewpoint& to = waypoints[i];
    const double t_min = segment_time(from, to, lim);
    if (t_min <= 0) continue;
    const Vec3 delta = to.position - from.position;
    const double d = delta.norm();
    const double yaw_delta = wrap_angle(to.yaw - from.yaw);

    TrajectorySegment seg;
    seg.start = from;
    seg.end = to;
    seg.yaw_delta = yaw_delta;
    seg.duration = std::max({opts.duration_safety * t_min, d * prof.peak_velocity / lim.v_max,
                             std::sqrt(d * prof.peak_acceleration / lim.a_max),
                             std::abs(yaw_delta) / lim.yaw_rate_max});
    seg.peak_speed = d * prof.peak_velocity / seg.duration;
    seg.coeffs.resize(3, n);
    double tpow = 1.0;
    for (int k = 0; k < n; ++k) {
      seg.coeffs.col(k) = delta * (prof.coeffs[k] / tpow);
      tpow *= seg.duration;
    }
    seg.coeffs.col(0) += from.position;
    segs.push_back(std::move(seg));
    kept.push_back(to);
  }
  if (segs.empty()) throw Error("trajectory needs at least 2 distinct waypoints");
  return Trajectory(std::move(kept), std::move(segs));
}

std::vector<TimedViewpoint> measurement_viewpoints(const Trajectory& traj, double freq,
                                                   double t_offset) {
  if (!(freq > 0)) throw Error("measurement frequency must be > 0");
  std::vector<TimedViewpoint> out;
  const double period = 1.0 / freq;
  const double total = traj.total_time();
  long k = t_offset < 0 ? static_cast<long>(std::ceil(-t_offset * freq - 1e-9)) : 0;
  for (;; ++k) {
    double t = t_offset + static_cast<double>(k) * period;
    if (t > total + 1e-9) break;
    t = std::clamp(t, 0.0, total);
    out.push_back({t, traj.viewpoint(t)});
  }
  return out;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path,
                          double rate_hz, double time_shift) {
  if (!(rate_hz > 0)) throw Error("trajectory sample rate must be > 0");
  CsvWriter csv(path, {"t", "x", "y", "z", "yaw"});
  const double total = traj.total_time();
  const long count = static_cast<long>(std::floor(total * rate_hz + 1e-9));
  auto emit = [&](double t) {
    const Vec3 p = traj.position(t);
    csv.row_numbers({t + time_shift, p.x(), p.y(), p.z(), traj.yaw(t)});
  };
  for (long k = 0; k <= count; ++k) emit(static_cast<double>(k) / rate_hz);
  if (static_cast<double>(count) / rate_hz < total - 1e-9) emit(total);
}

}  // namespace surfipp
