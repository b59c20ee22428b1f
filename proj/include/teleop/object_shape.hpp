#ifndef TELEOP_OBJECT_SHAPE_HPP
#define TELEOP_OBJECT_SHAPE_HPP

#include <stdexcept>

#include "teleop/se3.hpp"

namespace teleop {

/// Grasped-object geometry, expressed in the object frame with the
/// reference point at the center. Sphere and axis-aligned box only.
struct ObjectShape {
  enum class Kind { Sphere, Box };

  Kind kind = Kind::Sphere;
  double radius = 0.05;                          // sphere
  Vec3 half_extents = Vec3(0.05, 0.05, 0.05);    // box

  [[nodiscard]] static ObjectShape sphere(double r) {
    ObjectShape s;
    s.kind = Kind::Sphere;
    s.radius = r;
    return s;
  }
  [[nodiscard]] static ObjectShape box(const Vec3& half) {
    ObjectShape s;
    s.kind = Kind::Box;
    s.half_extents = half;
    return s;
  }

  /// Largest inscribed-sphere radius.
  [[nodiscard]] double inradius() const {
    return kind == Kind::Sphere ? radius : half_extents.minCoeff();
  }

  /// Unit normal pointing into the object at a surface point. Box points
  /// resolve to the face whose plane is nearest.
  [[nodiscard]] Vec3 inward_normal_at(const Vec3& surface_point) const {
    if (kind == Kind::Sphere) {
      const double n = surface_point.norm();
      if (n < 1e-12) throw std::invalid_argument("inward_normal_at: point at sphere center");
      return -surface_point / n;
    }
    int face = 0;
    double best = std::numeric_limits<double>::max();
    for (int axis = 0; axis < 3; ++axis) {
      const double gap = std::abs(half_extents(axis) - std::abs(surface_point(axis)));
      if (gap < best) {
        best = gap;
        face = axis;
      }
    }
    Vec3 n = Vec3::Zero();
    n(face) = surface_point(face) >= 0.0 ? -1.0 : 1.0;
    return n;
  }
};

}  // namespace teleop

#endif  // TELEOP_OBJECT_SHAPE_HPP
