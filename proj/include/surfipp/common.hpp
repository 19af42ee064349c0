#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace surfipp {

using Vec3 = Eigen::Vector3d;

/// Raised for failures inside a component (bad geometry, singular solves, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when user-supplied configuration violates a component invariant.
/// The message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// splitmix64 finalizer; used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return seed_combine(seed_combine(a, b), c);
}

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Camera pose: position (meters) and yaw (radians, in (-pi, pi]).
struct Viewpoint {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;

  Viewpoint() = default;
  Viewpoint(const Vec3& p, double psi) : position(p), yaw(wrap_angle(psi)) {}
};

}  // namespace surfipp
