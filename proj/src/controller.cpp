#include "teleop/controller.hpp"

namespace teleop {

TorqueCommand impedance_torque(const GainSet& gains, const DynamicsTerms& dynamics,
                               const VecX& q_des, const VecX& qdot_des, const VecX& qdd_des,
                               const JointState& state) {
  const Eigen::Index n = state.q.size();
  if (q_des.size() != n || qdot_des.size() != n || qdd_des.size() != n ||
      state.qdot.size() != n || gains.stiffness.size() != n || gains.damping.size() != n) {
    throw std::invalid_argument("impedance_torque: vector sizes do not match");
  }
  VecX tau = gains.stiffness.cwiseProduct(q_des - state.q) +
             gains.damping.cwiseProduct(qdot_des - state.qdot);
  if (dynamics.mass) {
    const MatX mass = dynamics.mass(q_des);
    if ((mass - mass.transpose()).lpNorm<Eigen::Infinity>() > 1e-12) {
      throw std::invalid_argument("impedance_torque: mass matrix must be symmetric");
    }
    tau += mass * qdd_des;
  }
  if (dynamics.coriolis) tau += dynamics.coriolis(q_des, qdot_des);
  if (dynamics.gravity) tau += dynamics.gravity(q_des);
  return TorqueCommand::of(tau);
}

TorqueCommand clamp_torque(const TorqueCommand& command, const HandProfile& profile) {
  if (command.tau.size() != profile.total_joints()) {
    throw std::invalid_argument("clamp_torque: torque size does not match profile");
  }
  TorqueCommand out = command;
  for (Eigen::Index j = 0; j < out.tau.size(); ++j) {
    const double limit = profile.torque_limits_nm(j);
    if (out.tau(j) > limit) {
      out.tau(j) = limit;
      out.clamped(j) = true;
    } else if (out.tau(j) < -limit) {
      out.tau(j) = -limit;
      out.clamped(j) = true;
    }
  }
  return out;
}

std::vector<Vec3> squeeze_targets(const ObjectShape& shape, const std::vector<Vec3>& contact_points,
                                  double depth) {
  if (depth < 0.0) throw std::invalid_argument("squeeze_targets: depth must be non-negative");
  if (depth > shape.inradius()) {
    throw std::invalid_argument("squeeze_targets: depth exceeds the object's inradius");
  }
  std::vector<Vec3> targets;
  targets.reserve(contact_points.size());
  for (const Vec3& c : contact_points) {
    targets.push_back(c + depth * shape.inward_normal_at(c));
  }
  return targets;
}

ResolvedRateStep resolved_rate_step(const MatX& stacked_jac, const ObjectJacobian& object_jac,
                                    const Twist& object_twist, const JointState& state,
                                    const ControllerConfig& config, const HandProfile& profile) {
  config.validate();
  if (stacked_jac.rows() != object_jac.stacked.rows()) {
    throw std::invalid_argument("resolved_rate_step: Jacobian row counts do not match");
  }
  const VecX fingertip_twists = object_jac.stacked * object_twist.vector();
  ResolvedRateStep out;
  out.qdot = pseudoinverse(stacked_jac) * fingertip_twists;
  out.q_des = clamp_to_joint_limits(profile, state.q + config.eta * config.dt * out.qdot);
  return out;
}

}  // namespace teleop
