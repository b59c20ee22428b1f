#ifndef TELEOP_CONTROLLER_HPP
#define TELEOP_CONTROLLER_HPP

#include <functional>
#include <vector>

#include "teleop/hand_model.hpp"
#include "teleop/object_shape.hpp"
#include "teleop/se3.hpp"

namespace teleop {

/// Per-joint stiffness and damping, both non-negative.
struct GainSet {
  VecX stiffness;  // N*m/rad
  VecX damping;    // N*m*s/rad

  [[nodiscard]] static GainSet uniform(Eigen::Index n, double k, double d) {
    return {VecX::Constant(n, k), VecX::Constant(n, d)};
  }
};

/// Feedforward dynamics providers. Defaults are all-zero, which matches a
/// high-gear-ratio drive where the rigid-body terms act as disturbance.
struct DynamicsTerms {
  std::function<MatX(const VecX&)> mass;                   // M(q)
  std::function<VecX(const VecX&, const VecX&)> coriolis;  // C(q, qdot)
  std::function<VecX(const VecX&)> gravity;                // g(q)

  [[nodiscard]] static DynamicsTerms zero() { return {}; }
};

struct ControllerConfig {
  double eta = 0.5;                  // resolved-rate gain, in (0, 2]
  double dt = 0.05;                  // s, outer-loop period (1 / rrm_rate)
  double squeeze_depth = 0.005;      // m
  double rotation_error_tol = 8.7e-3;  // rad (~0.5 deg)
  int max_steps = 200;
  /// Scale each outer-loop joint step so the stiffness torques it implies
  /// stay inside the drive limits. Keeps the commanded direction intact
  /// when the motors are weak; per-joint saturation would distort it.
  bool scale_commands_to_torque_budget = true;

  void validate() const {
    if (!(eta > 0.0) || eta > 2.0) throw std::invalid_argument("ControllerConfig: eta must be in (0, 2]");
    if (!(dt > 0.0)) throw std::invalid_argument("ControllerConfig: dt must be positive");
    if (squeeze_depth < 0.0) throw std::invalid_argument("ControllerConfig: squeeze_depth must be >= 0");
  }
};

struct TorqueCommand {
  VecX tau;  // N*m
  Eigen::Array<bool, Eigen::Dynamic, 1> clamped;

  [[nodiscard]] static TorqueCommand of(const VecX& tau_in) {
    return {tau_in, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(tau_in.size(), false)};
  }
};

struct ResolvedRateStep {
  VecX qdot;   // rad/s, least-squares joint rates
  VecX q_des;  // rad, incremental goal after limit clamping
};

/// Joint impedance law:
/// tau = K (q_des - q) + D (qdot_des - qdot) + M qdd_des + C(q_des, qdot_des) + g(q_des).
/// No torque clamping here; see clamp_torque.
[[nodiscard]] TorqueCommand impedance_torque(const GainSet& gains, const DynamicsTerms& dynamics,
                                             const VecX& q_des, const VecX& qdot_des,
                                             const VecX& qdd_des, const JointState& state);

/// Elementwise saturation at the profile's torque limits, flagging
/// saturated joints.
[[nodiscard]] TorqueCommand clamp_torque(const TorqueCommand& command, const HandProfile& profile);

/// Fingertip goal positions displaced into the object along each contact's
/// inward surface normal. Contacts are object-frame points on the surface.
/// Throws std::invalid_argument when depth exceeds the shape's inradius.
[[nodiscard]] std::vector<Vec3> squeeze_targets(const ObjectShape& shape,
                                                const std::vector<Vec3>& contact_points,
                                                double depth);

/// One outer-loop update: qdot solves the stacked fingertip twists
/// J_o * object_twist in the least-squares sense, then
/// q_des = q + eta * qdot * dt clamped to the joint limits.
[[nodiscard]] ResolvedRateStep resolved_rate_step(const MatX& stacked_jac,
                                                  const ObjectJacobian& object_jac,
                                                  const Twist& object_twist,
                                                  const JointState& state,
                                                  const ControllerConfig& config,
                                                  const HandProfile& profile);

}  // namespace teleop

#endif  // TELEOP_CONTROLLER_HPP
