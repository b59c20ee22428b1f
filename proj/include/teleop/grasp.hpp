#ifndef TELEOP_GRASP_HPP
#define TELEOP_GRASP_HPP

#include <vector>

#include "teleop/se3.hpp"

namespace teleop {

/// One fingertip contact: offset from the object reference point and the
/// unit normal pointing into the object.
struct Contact {
  Vec3 r = Vec3::Zero();              // m, reference point -> contact point
  Vec3 inward_normal = Vec3::UnitZ();  // unit
};

/// Net force and moment on the object. Stacks as [force; moment].
struct Wrench {
  Vec3 force = Vec3::Zero();   // N
  Vec3 moment = Vec3::Zero();  // N*m

  [[nodiscard]] Vec6 vector() const {
    Vec6 w;
    w << force, moment;
    return w;
  }
  [[nodiscard]] static Wrench from_vector(const Vec6& w) {
    return {w.head<3>(), w.tail<3>()};
  }
};

struct ObjectInertia {
  double mass = 1.0;                     // kg
  Mat3 inertia = Mat3::Identity();       // kg*m^2, symmetric positive definite
  Vec3 angular_velocity = Vec3::Zero();  // rad/s

  /// Throws std::invalid_argument on non-physical parameters.
  void validate() const;
};

/// Map from stacked contact forces (3p) to the net object wrench (6).
/// Column block i is [I3; skew(r_i)].
struct GraspMatrix {
  std::vector<Contact> contacts;
  MatX G;  // 6 x 3p

  [[nodiscard]] Eigen::Index contact_count() const {
    return static_cast<Eigen::Index>(contacts.size());
  }
};

/// Decomposition of fingertip forces into the minimum-norm equilibrating
/// field and a null-space (interaction) field N * alpha.
struct ForceSolution {
  std::vector<Vec3> particular;  // p equilibrating forces, N
  MatX null_basis;               // 3p x (3p - rank), orthonormal columns
  VecX alpha;                    // coefficients over null_basis

  /// Stacked total force vector particular + null_basis * alpha.
  [[nodiscard]] VecX stacked_total() const;
  /// Force at contact i including the interaction component.
  [[nodiscard]] Vec3 force_at(Eigen::Index i) const;
  /// Stacked interaction component alone.
  [[nodiscard]] VecX stacked_interaction() const;
};

/// Throws std::invalid_argument on an empty contact list.
[[nodiscard]] GraspMatrix build_grasp_matrix(const std::vector<Contact>& contacts);

/// Wrench that produces the given accelerations:
/// force = M a, moment = I dw + w x (I w).
[[nodiscard]] Wrench object_wrench(const ObjectInertia& inertia, const Vec3& linear_accel,
                                   const Vec3& angular_accel);

/// Minimum-norm particular forces G+ W plus the orthonormal null basis;
/// alpha starts at zero.
[[nodiscard]] ForceSolution force_decompose(const GraspMatrix& grasp, const Wrench& wrench);

/// Picks alpha so every contact's force component along its inward normal is
/// at least f_min, using a least-squares fit over unit vectors along the
/// lines joining fingertip pairs. The net wrench G * F is unchanged.
/// Throws std::runtime_error when the geometry cannot reach f_min.
[[nodiscard]] ForceSolution select_interaction_forces(const ForceSolution& solution,
                                                      const GraspMatrix& grasp, double f_min);

}  // namespace teleop

#endif  // TELEOP_GRASP_HPP
