#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace capa {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation angles about the global x, y and z axes, in radians.
struct RotationAngles {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Position and orientation of one user aperture. The local frame has its
/// origin at `center` and its xy-plane on the aperture.
struct UserPose {
  Vec3 center = Vec3::Zero();
  RotationAngles angles;
};

/// Rectangular aperture centred at its local origin, sides in meters.
struct ApertureSpec {
  double side_x = 0.0;
  double side_y = 0.0;

  double area() const { return side_x * side_y; }
  void validate() const;
};

struct ScenarioGeometry {
  ApertureSpec bs_aperture;
  ApertureSpec user_aperture;
  std::vector<UserPose> poses;
  double wavelength = 0.0;      // m
  double impedance = 0.0;       // ohm
  double noise_var = 0.0;       // V^2
  double current_budget = 0.0;  // mA^2
  int streams = 1;

  std::size_t user_count() const { return poses.size(); }

  /// Throws std::invalid_argument when any invariant is broken.
  void validate() const;
};

/// R_x(a.x) * R_y(a.y) * R_z(a.z), in that order.
Mat3 rotation_matrix(const RotationAngles& a);

/// Maps an in-plane local point (z = 0 implied) to global coordinates.
Vec3 local_to_global(const UserPose& pose, const Vec2& local);

/// Inverse of local_to_global; the returned z component is the distance
/// off the aperture plane.
Vec3 global_to_local(const UserPose& pose, const Vec3& global);

/// Receive polarization: the rotated y axis.
Vec3 rx_polarization(const UserPose& pose);

/// Transmit polarization of the BS aperture (fixed y axis).
inline Vec3 tx_polarization() { return Vec3::UnitY(); }

}  // namespace capa
