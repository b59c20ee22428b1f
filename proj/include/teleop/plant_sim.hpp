#ifndef TELEOP_PLANT_SIM_HPP
#define TELEOP_PLANT_SIM_HPP

#include <functional>
#include <optional>
#include <vector>

#include "teleop/controller.hpp"
#include "teleop/hand_model.hpp"
#include "teleop/object_shape.hpp"

namespace teleop {

/// Quasi-static plant state. Contact points are stored in the object frame
/// and never move there (sticking contact by construction).
struct PlantState {
  JointState joints;
  Pose object_pose;
  std::vector<Vec3> contact_points_object_frame;
  std::vector<Vec3> contact_forces;  // world frame, per contact
  double time = 0.0;
};

/// Plant parameters. Joints act as velocity sources (qdot = gamma * tau),
/// the high-gear-ratio regime where drive dynamics are negligible.
struct PlantConfig {
  double viscous_gain = 2.0;  // rad/s per N*m
  ObjectShape shape = ObjectShape::sphere(0.0);  // radius 0 = fit to grasp
  std::vector<Eigen::Index> grasp_chains = {0, 1, 3};
  VecX initial_q;  // empty = default grasp posture
  std::optional<std::uint64_t> encoder_noise_seed;  // enables quantized readout
  double interaction_f_min = 0.0;  // N, squeeze assigned to logged forces
  double torque_rate_hz = 0.0;     // 0 = take from the hand profile
  double rrm_rate_hz = 0.0;        // 0 = take from the hand profile

  void validate() const {
    if (!(viscous_gain > 0.0)) throw std::invalid_argument("PlantConfig: viscous_gain must be positive");
  }
};

struct TrajectoryRow {
  double t = 0.0;
  VecX q;          // reported joint angles, rad
  VecX tau;        // commanded (clamped) torques, N*m
  Eigen::Vector4d quaternion = Eigen::Vector4d(1, 0, 0, 0);  // w, x, y, z
  Vec3 position = Vec3::Zero();
};

struct EpisodeResult {
  bool converged = false;
  int outer_steps = 0;
  double final_rotation_error = 0.0;    // rad
  double final_translation_error = 0.0; // m
  std::vector<double> rotation_errors;  // per outer step, before the update
  std::vector<TrajectoryRow> log;       // one row per inner step
  PlantState final_state;
  ObjectShape effective_shape;
  std::vector<Vec3> initial_contacts_object_frame;
  Pose initial_object_pose;
};

/// Minimum-norm object twist explaining the stacked fingertip twists,
/// the same least-squares operator used for intent estimation.
[[nodiscard]] Twist object_twist_from_fingertips(const VecX& stacked_fingertip_twists,
                                                 const ObjectJacobian& object_jac);

/// One inner-rate step: joints integrate qdot = gamma * tau under their
/// limits, fingertip twists follow the chain Jacobians, and the object
/// integrates the minimum-norm twist. Contact points stay fixed in the
/// object frame.
[[nodiscard]] PlantState step_plant(const PlantState& state, const TorqueCommand& torque,
                                    double dt_inner, const HandProfile& profile,
                                    const PlantConfig& config);

/// Joint state as the encoders would report it: quantized at the profile
/// resolution when the config enables it, with a seeded per-joint phase.
[[nodiscard]] JointState reported_joints(const PlantState& state, const HandProfile& profile,
                                         const PlantConfig& config);

/// Initial plant state: fingertips of the grasp chains become the contact
/// set, the object sits at their centroid with identity rotation.
[[nodiscard]] PlantState make_initial_state(const HandProfile& profile, const PlantConfig& config,
                                            ObjectShape* effective_shape = nullptr);

/// Closed-loop episode toward a fixed goal pose: resolved-rate outer loop
/// at the rrm rate, impedance inner loop at the torque rate, until the
/// rotation error tolerance or max_steps.
[[nodiscard]] EpisodeResult run_episode(const HandProfile& profile, const PlantConfig& plant_config,
                                        const ControllerConfig& control, const GainSet& gains,
                                        const Pose& goal);

/// Same loop against a time-varying goal, running for a fixed duration.
[[nodiscard]] EpisodeResult run_episode_streaming(const HandProfile& profile,
                                                  const PlantConfig& plant_config,
                                                  const ControllerConfig& control,
                                                  const GainSet& gains,
                                                  const std::function<Pose(double)>& goal_at,
                                                  double duration_s);

}  // namespace teleop

#endif  // TELEOP_PLANT_SIM_HPP
