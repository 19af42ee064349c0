#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "surfipp/common.hpp"

namespace surfipp {

struct DynamicsLimits {
  double v_max = 4.0;                          // m/s
  double a_max = 3.0;                          // m/s^2
  double yaw_rate_max = 1.5707963267948966;    // rad/s
  double uav_radius = 0.6;                     // m

  void validate() const;
};

/// Minimum time between two poses: translation on a trapezoidal (or
/// triangular) velocity profile, or the yaw slew, whichever is longer.
double segment_time(const Viewpoint& from, const Viewpoint& to, const DynamicsLimits& lim);

/// Normalized rest-to-rest position profile s(tau), tau in [0, 1]:
/// minimum integrated squared snap among polynomials of the given order with
/// s(0) = 0, s(1) = 1 and zero velocity and acceleration at both ends.
struct RestToRestProfile {
  Eigen::VectorXd coeffs;  // in powers of tau
  double peak_velocity = 0.0;
  double peak_acceleration = 0.0;
};
const RestToRestProfile& rest_to_rest_profile(int order);

struct TrajectorySegment {
  Viewpoint start;
  Viewpoint end;
  double duration = 0.0;
  Eigen::Matrix<double, 3, Eigen::Dynamic> coeffs;  // per axis, powers of local time
  double yaw_delta = 0.0;                            // signed shortest rotation
  double peak_speed = 0.0;
};

class Trajectory {
 public:
  Trajectory(std::vector<Viewpoint> control_waypoints, std::vector<TrajectorySegment> segments);

  const std::vector<Viewpoint>& control_waypoints() const { return waypoints_; }
  const std::vector<TrajectorySegment>& segments() const { return segments_; }
  double total_time() const { return total_; }
  double segment_start(std::size_t i) const { return starts_[i]; }

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;
  double yaw(double t) const;
  Viewpoint viewpoint(double t) const { return Viewpoint(position(t), yaw(t)); }

  /// Times whose positions are spaced at most `step` apart along the path,
  /// including both ends. Per segment the count is a power of two, so
  /// halving step yields a superset.
  std::vector<double> sample_times(double step) const;

 private:
  std::size_t locate(double t, double& local) const;

  std::vector<Viewpoint> waypoints_;
  std::vector<TrajectorySegment> segments_;
  std::vector<double> starts_;
  double total_ = 0.0;
};

struct TrajectoryOptions {
  int order = 12;                // polynomial order k, >= 5
  double duration_safety = 1.1;  // factor on segment_time
};

/// Rest-to-rest polynomial segments through the waypoints. Consecutive
/// identical poses are merged. Segment durations respect v_max, a_max and the
/// yaw rate on the sampled profile.
Trajectory plan_polynomial(const std::vector<Viewpoint>& waypoints, const DynamicsLimits& lim,
                           const TrajectoryOptions& opts = {});

struct TimedViewpoint {
  double time = 0.0;
  Viewpoint viewpoint;
};

/// Poses at t_offset + k / freq for k = 0, 1, ... while within the trajectory.
std::vector<TimedViewpoint> measurement_viewpoints(const Trajectory& traj, double freq,
                                                   double t_offset);

/// CSV with columns t, x, y, z, yaw sampled at `rate_hz` (end time included).
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path,
                          double rate_hz, double time_shift = 0.0);

}  // namespace surfipp
