#pragma once

#include "linevio/core/so3.hpp"
#include "linevio/core/types.hpp"

namespace linevio {

enum class Axis { X, Y, Z };

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "X";
    case Axis::Y: return "Y";
    case Axis::Z: return "Z";
  }
  return "?";
}

// Pure rotation from the parameter space {L} to the start frame {S}; maps the
// parameter-space z axis onto the structural direction.
inline Mat3 axis_rotation(Axis axis) {
  Mat3 r = Mat3::Zero();
  switch (axis) {
    case Axis::Z:
      return Mat3::Identity();
    case Axis::X:  // columns [e_y, e_z, e_x]
      r(1, 0) = 1.0;
      r(2, 1) = 1.0;
      r(0, 2) = 1.0;
      return r;
    case Axis::Y:  // columns [e_z, e_x, e_y]
      r(2, 0) = 1.0;
      r(0, 1) = 1.0;
      r(1, 2) = 1.0;
      return r;
  }
  return Mat3::Identity();
}

inline Vec3 axis_unit(Axis axis) {
  switch (axis) {
    case Axis::X: return Vec3::UnitX();
    case Axis::Y: return Vec3::UnitY();
    case Axis::Z: return Vec3::UnitZ();
  }
  return Vec3::UnitZ();
}

// Local Manhattan world: a yaw rotation of the gravity-aligned world frame.
// phi is kept in [0, pi/2) since X/Y labels are interchangeable.
struct ManhattanFrame {
  double phi = 0.0;

  Mat3 R_S_W() const { return rot_z(phi); }

  Vec3 axis_direction_world(Axis axis) const {
    return R_S_W() * axis_unit(axis);
  }
};

inline double wrap_manhattan_yaw(double phi) {
  phi = std::fmod(phi, kPi / 2.0);
  if (phi < 0.0) phi += kPi / 2.0;
  return phi;
}

}  // namespace linevio
