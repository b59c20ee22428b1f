#include "teleop/plant_sim.hpp"

#include <cmath>
#include <random>

#include "teleop/grasp.hpp"

namespace teleop {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

std::vector<Contact> world_contacts(const PlantState& state, const ObjectShape& shape) {
  std::vector<Contact> contacts;
  contacts.reserve(state.contact_points_object_frame.size());
  for (const Vec3& p_obj : state.contact_points_object_frame) {
    Contact c;
    c.r = state.object_pose.rotation * p_obj;  // offset from the reference point
    c.inward_normal = state.object_pose.rotation * shape.inward_normal_at(p_obj);
    contacts.push_back(c);
  }
  return contacts;
}

double rate_or(double override_hz, double profile_hz) {
  return override_hz > 0.0 ? override_hz : profile_hz;
}

}  // namespace

Twist object_twist_from_fingertips(const VecX& stacked_fingertip_twists,
                                   const ObjectJacobian& object_jac) {
  return min_norm_object_twist(stacked_fingertip_twists, object_jac);
}

PlantState step_plant(const PlantState& state, const TorqueCommand& torque, double dt_inner,
                      const HandProfile& profile, const PlantConfig& config) {
  config.validate();
  if (!(dt_inner > 0.0)) throw std::invalid_argument("step_plant: dt_inner must be positive");
  if (torque.tau.size() != profile.total_joints()) {
    throw std::invalid_argument("step_plant: torque size does not match profile");
  }

  PlantState next = state;
  const VecX qdot_cmd = config.viscous_gain * torque.tau;
  VecX q_new = clamp_to_joint_limits(profile, state.joints.q + dt_inner * qdot_cmd);
  VecX qdot = (q_new - state.joints.q) / dt_inner;

  if (!config.grasp_chains.empty() && !state.contact_points_object_frame.empty()) {
    const auto m = static_cast<Eigen::Index>(config.grasp_chains.size());
    const MatX jac = stacked_jacobian_for_chains(profile, state.joints.q, config.grasp_chains);
    const auto contacts = world_contacts(state, config.shape);
    const ObjectJacobian object_jac = object_jacobians(contacts);

    // Sticking point contacts constrain the contact-point linear
    // velocities to a common rigid field v_o + w_o x r_i; fingertip
    // angular velocity stays free (a point contact transmits no moment).
    // The contact reactions cancel the incompatible component of the
    // drive motion: a least-squares projection at the velocity level.
    // Without it the fingertips drift off the stuck contact points.
    MatX jac_lin(3 * m, jac.cols());
    MatX object_lin(3 * m, 6);
    for (Eigen::Index i = 0; i < m; ++i) {
      jac_lin.middleRows(3 * i, 3) = jac.middleRows(6 * i + 3, 3);
      object_lin.middleRows(3 * i, 3) = object_jac.stacked.middleRows(6 * i + 3, 3);
    }
    const MatX object_lin_pinv = pseudoinverse(object_lin);
    const MatX incompatible = jac_lin - object_lin * (object_lin_pinv * jac_lin);
    qdot -= pseudoinverse(incompatible) * (incompatible * qdot);
    q_new = clamp_to_joint_limits(profile, state.joints.q + dt_inner * qdot);
    qdot = (q_new - state.joints.q) / dt_inner;

    // Minimum-norm rigid motion consistent with the contact-point motion.
    const Twist object_twist = Twist::from_vector(object_lin_pinv * (jac_lin * qdot));
    next.object_pose = apply_twist(state.object_pose, object_twist, dt_inner);
  }

  next.joints.q = q_new;
  next.joints.qdot = qdot;
  next.time = state.time + dt_inner;
  return next;
}

JointState reported_joints(const PlantState& state, const HandProfile& profile,
                           const PlantConfig& config) {
  if (!config.encoder_noise_seed) return state.joints;
  const double res = profile.encoder_resolution_deg * kDegToRad;
  if (!(res > 0.0)) return state.joints;

  std::mt19937_64 rng(*config.encoder_noise_seed);
  std::uniform_real_distribution<double> phase(-res / 2.0, res / 2.0);
  JointState out = state.joints;
  for (Eigen::Index j = 0; j < out.q.size(); ++j) {
    const double offset = phase(rng);
    out.q(j) = std::round((state.joints.q(j) - offset) / res) * res + offset;
  }
  return out;
}

PlantState make_initial_state(const HandProfile& profile, const PlantConfig& config,
                              ObjectShape* effective_shape) {
  config.validate();
  PlantState state;
  state.joints.q = config.initial_q.size() > 0 ? config.initial_q : default_grasp_posture(profile);
  if (state.joints.q.size() != profile.total_joints()) {
    throw std::invalid_argument("make_initial_state: initial_q size does not match profile");
  }
  state.joints.qdot = VecX::Zero(profile.total_joints());

  Vec3 centroid = Vec3::Zero();
  const std::vector<Contact> contacts =
      fingertip_contacts(profile, state.joints.q, config.grasp_chains, &centroid);

  state.object_pose = Pose{Mat3::Identity(), centroid};
  for (const Contact& c : contacts) state.contact_points_object_frame.push_back(c.r);
  state.contact_forces.assign(contacts.size(), Vec3::Zero());

  ObjectShape shape = config.shape;
  if (shape.kind == ObjectShape::Kind::Sphere && shape.radius <= 0.0) {
    double mean_dist = 0.0;
    for (const Vec3& p : state.contact_points_object_frame) mean_dist += p.norm();
    shape.radius = mean_dist / static_cast<double>(contacts.size());
  }
  if (effective_shape) *effective_shape = shape;
  return state;
}

namespace {

struct LoopRates {
  double dt_inner;
  int inner_per_outer;
};

LoopRates loop_rates(const HandProfile& profile, const PlantConfig& config) {
  const double torque_hz = rate_or(config.torque_rate_hz, profile.torque_rate_hz);
  const double rrm_hz = rate_or(config.rrm_rate_hz, profile.rrm_rate_hz);
  if (!(torque_hz > 0.0) || !(rrm_hz > 0.0) || torque_hz < rrm_hz) {
    throw std::invalid_argument("run_episode: torque rate must be >= rrm rate and positive");
  }
  LoopRates r;
  r.dt_inner = 1.0 / torque_hz;
  r.inner_per_outer = std::max(1, static_cast<int>(std::lround(torque_hz / rrm_hz)));
  return r;
}

/// Squeeze forces for the logged contact-force field: W = 0 in the
/// quasi-static regime, so the whole assignment is interaction force.
std::vector<Vec3> interaction_force_assignment(const PlantState& state, const ObjectShape& shape,
                                               double f_min) {
  const auto contacts = world_contacts(state, shape);
  if (contacts.size() < 2 || f_min <= 0.0) {
    return std::vector<Vec3>(contacts.size(), Vec3::Zero());
  }
  const GraspMatrix grasp = build_grasp_matrix(contacts);
  ForceSolution sol = force_decompose(grasp, Wrench{});
  sol = select_interaction_forces(sol, grasp, f_min);
  std::vector<Vec3> forces;
  forces.reserve(contacts.size());
  for (Eigen::Index i = 0; i < grasp.contact_count(); ++i) forces.push_back(sol.force_at(i));
  return forces;
}

Eigen::Vector4d quaternion_wxyz(const Mat3& rotation) {
  const Eigen::Quaterniond q(rotation);
  return {q.w(), q.x(), q.y(), q.z()};
}

EpisodeResult run_loop(const HandProfile& profile, const PlantConfig& plant_config,
                       const ControllerConfig& control, const GainSet& gains,
                       const std::function<Pose(double)>& goal_at, int max_outer,
                       bool stop_on_tolerance) {
  control.validate();
  const LoopRates rates = loop_rates(profile, plant_config);

  EpisodeResult result;
  ObjectShape shape;
  PlantState state = make_initial_state(profile, plant_config, &shape);
  result.effective_shape = shape;
  result.initial_contacts_object_frame = state.contact_points_object_frame;
  result.initial_object_pose = state.object_pose;

  PlantConfig cfg = plant_config;
  cfg.shape = shape;

  const VecX zeros = VecX::Zero(profile.total_joints());
  int outer = 0;
  for (; outer < max_outer; ++outer) {
    const Pose goal = goal_at(state.time);
    const double rot_err =
        rotation_log<double>(goal.rotation * state.object_pose.rotation.transpose()).norm();
    result.rotation_errors.push_back(rot_err);
    if (stop_on_tolerance && rot_err <= control.rotation_error_tol) {
      result.converged = true;
      break;
    }

    const JointState sensed = reported_joints(state, profile, cfg);
    const MatX jac = stacked_jacobian_for_chains(profile, sensed.q, cfg.grasp_chains);
    PlantState sensed_state = state;
    sensed_state.joints = sensed;
    const ObjectJacobian object_jac = object_jacobians(world_contacts(sensed_state, shape));
    const Twist desired_twist = screw_between_poses(state.object_pose, goal, control.dt);
    const ResolvedRateStep rrs =
        resolved_rate_step(jac, object_jac, desired_twist, sensed, control, profile);

    VecX q_cmd = rrs.q_des;
    if (control.scale_commands_to_torque_budget) {
      const VecX dq = rrs.q_des - sensed.q;
      double scale = 1.0;
      for (Eigen::Index j = 0; j < dq.size(); ++j) {
        const double implied = gains.stiffness(j) * std::abs(dq(j));
        const double budget = 0.9 * profile.torque_limits_nm(j);
        if (implied > budget) scale = std::min(scale, budget / implied);
      }
      q_cmd = sensed.q + scale * dq;
    }

    state.contact_forces = interaction_force_assignment(state, shape, cfg.interaction_f_min);

    for (int i = 0; i < rates.inner_per_outer; ++i) {
      const JointState inner_sensed = reported_joints(state, profile, cfg);
      TorqueCommand tau = impedance_torque(gains, DynamicsTerms::zero(), q_cmd, zeros, zeros,
                                           inner_sensed);
      tau = clamp_torque(tau, profile);
      state = step_plant(state, tau, rates.dt_inner, profile, cfg);

      TrajectoryRow row;
      row.t = state.time;
      row.q = reported_joints(state, profile, cfg).q;
      row.tau = tau.tau;
      row.quaternion = quaternion_wxyz(state.object_pose.rotation);
      row.position = state.object_pose.origin;
      result.log.push_back(std::move(row));
    }
  }

  state.contact_forces = interaction_force_assignment(state, shape, cfg.interaction_f_min);

  const Pose goal = goal_at(state.time);
  result.outer_steps = outer;
  result.final_rotation_error =
      rotation_log<double>(goal.rotation * state.object_pose.rotation.transpose()).norm();
  result.final_translation_error = (goal.origin - state.object_pose.origin).norm();
  if (!stop_on_tolerance) {
    result.converged = result.final_rotation_error <= control.rotation_error_tol;
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace

EpisodeResult run_episode(const HandProfile& profile, const PlantConfig& plant_config,
                          const ControllerConfig& control, const GainSet& gains,
                          const Pose& goal) {
  return run_loop(profile, plant_config, control, gains, [&goal](double) { return goal; },
                  control.max_steps, true);
}

EpisodeResult run_episode_streaming(const HandProfile& profile, const PlantConfig& plant_config,
                                    const ControllerConfig& control, const GainSet& gains,
                                    const std::function<Pose(double)>& goal_at,
                                    double duration_s) {
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("run_episode_streaming: duration must be positive");
  }
  const int outer_steps = std::max(1, static_cast<int>(std::ceil(duration_s / control.dt)));
  return run_loop(profile, plant_config, control, gains, goal_at, outer_steps, false);
}

}  // namespace teleop
