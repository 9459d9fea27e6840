#include "capa/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace capa {

void ApertureSpec::validate() const {
  if (!(side_x > 0.0) || !(side_y > 0.0) || !std::isfinite(side_x) ||
      !std::isfinite(side_y)) {
    throw std::invalid_argument("aperture sides must be positive and finite (got " +
                                std::to_string(side_x) + " x " + std::to_string(side_y) +
                                ")");
  }
}

void ScenarioGeometry::validate() const {
  bs_aperture.validate();
  user_aperture.validate();
  if (poses.empty()) throw std::invalid_argument("scenario needs at least one user");
  if (streams < 1) throw std::invalid_argument("stream count must be >= 1");
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(wavelength)) throw std::invalid_argument("wavelength must be > 0");
  if (!positive(impedance)) throw std::invalid_argument("impedance must be > 0");
  if (!positive(noise_var)) throw std::invalid_argument("noise variance must be > 0");
  if (!positive(current_budget)) throw std::invalid_argument("current budget must be > 0");
  for (const auto& p : poses) {
    if (!p.center.allFinite() || !std::isfinite(p.angles.x) || !std::isfinite(p.angles.y) ||
        !std::isfinite(p.angles.z)) {
      throw std::invalid_argument("user pose contains non-finite values");
    }
  }
}

Mat3 rotation_matrix(const RotationAngles& a) {
  const double cx = std::cos(a.x), sx = std::sin(a.x);
  const double cy = std::cos(a.y), sy = std::sin(a.y);
  const double cz = std::cos(a.z), sz = std::sin(a.z);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return rx * ry * rz;
}

Vec3 local_to_global(const UserPose& pose, const Vec2& local) {
  return rotation_matrix(pose.angles) * Vec3(local.x(), local.y(), 0.0) + pose.center;
}

Vec3 global_to_local(const UserPose& pose, const Vec3& global) {
  return rotation_matrix(pose.angles).transpose() * (global - pose.center);
}

Vec3 rx_polarization(const UserPose& pose) {
  return rotation_matrix(pose.angles) * tx_polarization();
}

}  // namespace capa
