#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "teleop/plant_sim.hpp"

using namespace teleop;

namespace {

constexpr double kDeg = M_PI / 180.0;

HandProfile single_joint_profile() {
  HandProfile p;
  p.name = "single_joint";
  SerialChain chain;
  chain.joints = {{0.05, 0.0, 0.0, 0.0}};
  p.chains = {chain};
  p.joint_limits_deg = {{-180.0, 180.0}};
  p.torque_limits_nm = VecX::Constant(1, 100.0);
  p.gear_ratio = 100.0;
  p.torque_rate_hz = 333.0;
  p.rrm_rate_hz = 20.0;
  p.encoder_resolution_deg = 0.005;
  return p;
}

Pose rotated_goal(const Pose& initial, double degrees_about_z) {
  Pose goal = initial;
  goal.rotation = rodrigues_exp<double>(Vec3(0, 0, degrees_about_z * kDeg)) * goal.rotation;
  return goal;
}

bool rows_identical(const std::vector<TrajectoryRow>& a, const std::vector<TrajectoryRow>& b,
                    double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t) return false;
    if ((a[i].q - b[i].q).lpNorm<Eigen::Infinity>() > tol) return false;
    if ((a[i].tau - b[i].tau).lpNorm<Eigen::Infinity>() > tol) return false;
    if ((a[i].quaternion - b[i].quaternion).lpNorm<Eigen::Infinity>() > tol) return false;
    if ((a[i].position - b[i].position).lpNorm<Eigen::Infinity>() > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("object_twist_from_fingertips recovers rigid motions") {
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Contact> contacts(3);
  for (Contact& c : contacts) c.r = 0.05 * Vec3(u(rng), u(rng), u(rng));
  const ObjectJacobian jac = object_jacobians(contacts);

  CHECK(object_twist_from_fingertips(VecX::Zero(18), jac).vector().norm() == 0.0);

  Twist t;
  t.angular = Vec3(0.4, -0.1, 0.2);
  t.linear = Vec3(0.02, 0.01, -0.005);
  const Twist back = object_twist_from_fingertips(jac.stacked * t.vector(), jac);
  CHECK((back.vector() - t.vector()).norm() < 1e-10);

  // Identical pure translation at every contact is a rigid translation.
  const Vec3 slide(0.01, -0.02, 0.03);
  VecX stacked = VecX::Zero(18);
  for (int i = 0; i < 3; ++i) stacked.segment<3>(6 * i + 3) = slide;
  const Twist est = object_twist_from_fingertips(stacked, jac);
  CHECK(est.angular.norm() < 1e-12);
  CHECK((est.linear - slide).norm() < 1e-12);

  CHECK_THROWS_AS((void)object_twist_from_fingertips(VecX::Zero(12), jac),
                  std::invalid_argument);
}

TEST_CASE("step_plant leaves the state alone under zero torque") {
  const HandProfile profile = default_hand_profile();
  PlantConfig config;
  PlantState state = make_initial_state(profile, config);
  const PlantState next =
      step_plant(state, TorqueCommand::of(VecX::Zero(16)), 1.0 / 333.0, profile, config);
  CHECK((next.joints.q - state.joints.q).norm() == 0.0);
  CHECK((next.object_pose.matrix() - state.object_pose.matrix()).norm() == 0.0);
  CHECK(next.time == doctest::Approx(1.0 / 333.0));
}

TEST_CASE("single joint follows the discrete first-order response") {
  const HandProfile profile = single_joint_profile();
  PlantConfig config;
  config.grasp_chains = {};
  config.viscous_gain = 2.0;
  const double stiffness = 5.0;
  const double q_des = 0.3;
  const double dt = 1.0 / profile.torque_rate_hz;

  PlantState state;
  state.joints = JointState::zero(1);
  state.object_pose = Pose::identity();

  const GainSet gains = GainSet::uniform(1, stiffness, 0.0);
  const double factor = 1.0 - dt * config.viscous_gain * stiffness;
  for (int n = 1; n <= 1000; ++n) {
    const TorqueCommand tau = impedance_torque(gains, DynamicsTerms::zero(),
                                               VecX::Constant(1, q_des), VecX::Zero(1),
                                               VecX::Zero(1), state.joints);
    state = step_plant(state, tau, dt, profile, config);
    if (n == 50 || n == 333 || n == 1000) {
      const double oracle = q_des * (1.0 - std::pow(factor, n));
      CHECK(state.joints.q(0) == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
  // Converged to the target, which is what rate gamma * K promises.
  CHECK(state.joints.q(0) == doctest::Approx(q_des).epsilon(1e-6));
}

TEST_CASE("contact points stay fixed in the object frame") {
  const HandProfile profile = default_hand_profile();
  PlantConfig config;
  PlantState state = make_initial_state(profile, config);
  const std::vector<Vec3> anchored = state.contact_points_object_frame;

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int n = 0; n < 1000; ++n) {
    VecX tau(16);
    for (Eigen::Index i = 0; i < 16; ++i) tau(i) = u(rng);
    state = step_plant(state, TorqueCommand::of(tau), 1.0 / 333.0, profile, config);
  }
  for (std::size_t i = 0; i < anchored.size(); ++i) {
    CHECK((state.contact_points_object_frame[i] - anchored[i]).norm() <= 1e-9);
  }
  CHECK(state.object_pose.orthonormality_error() < 1e-9);
}

TEST_CASE("run_episode converges immediately when already at the goal") {
  const HandProfile profile = default_hand_profile();
  PlantConfig plant;
  ControllerConfig ctrl;
  const GainSet gains = GainSet::uniform(16, 5.0, 0.1);
  const PlantState init = make_initial_state(profile, plant);

  const EpisodeResult res = run_episode(profile, plant, ctrl, gains, init.object_pose);
  CHECK(res.converged);
  CHECK(res.outer_steps == 0);
  CHECK(res.log.empty());
}

TEST_CASE("run_episode reaches a 10 degree rotation with monotone error") {
  const HandProfile profile = default_hand_profile();
  PlantConfig plant;
  ControllerConfig ctrl;
  const GainSet gains = GainSet::uniform(16, 5.0, 0.1);
  const PlantState init = make_initial_state(profile, plant);

  const EpisodeResult res =
      run_episode(profile, plant, ctrl, gains, rotated_goal(init.object_pose, 10.0));
  CHECK(res.converged);
  CHECK(res.outer_steps < 200);
  CHECK(res.final_rotation_error < 0.5 * kDeg);
  for (std::size_t i = 1; i < res.rotation_errors.size(); ++i) {
    CHECK(res.rotation_errors[i] <= res.rotation_errors[i - 1] + 1e-12);
  }
  CHECK(res.log.size() == static_cast<std::size_t>(res.outer_steps) * 17);
}

TEST_CASE("weak drives still converge, monotonically, in more steps") {
  const HandProfile profile = default_hand_profile();
  HandProfile weak = profile;
  weak.torque_limits_nm *= 0.1;

  PlantConfig plant;
  ControllerConfig ctrl;
  ctrl.max_steps = 600;
  const GainSet gains = GainSet::uniform(16, 5.0, 0.1);
  const PlantState init = make_initial_state(profile, plant);
  const Pose goal = rotated_goal(init.object_pose, 10.0);

  const EpisodeResult strong = run_episode(profile, plant, ctrl, gains, goal);
  const EpisodeResult feeble = run_episode(weak, plant, ctrl, gains, goal);
  CHECK(strong.converged);
  CHECK(feeble.converged);
  CHECK(feeble.outer_steps > strong.outer_steps);
  for (std::size_t i = 1; i < feeble.rotation_errors.size(); ++i) {
    CHECK(feeble.rotation_errors[i] <= feeble.rotation_errors[i - 1] + 1e-12);
  }
}

TEST_CASE("episodes are deterministic") {
  const HandProfile profile = default_hand_profile();
  PlantConfig plant;
  plant.encoder_noise_seed = 42;
  plant.interaction_f_min = 0.5;
  ControllerConfig ctrl;
  const GainSet gains = GainSet::uniform(16, 5.0, 0.1);
  const PlantState init = make_initial_state(profile, plant);
  const Pose goal = rotated_goal(init.object_pose, 8.0);

  const EpisodeResult a = run_episode(profile, plant, ctrl, gains, goal);
  const EpisodeResult b = run_episode(profile, plant, ctrl, gains, goal);
  CHECK(a.outer_steps == b.outer_steps);
  CHECK(rows_identical(a.log, b.log, 0.0));
}

TEST_CASE("interaction forces change contact forces but not the trajectory") {
  const HandProfile profile = default_hand_profile();
  ControllerConfig ctrl;
  const GainSet gains = GainSet::uniform(16, 5.0, 0.1);

  PlantConfig no_squeeze;
  no_squeeze.interaction_f_min = 0.0;
  PlantConfig squeeze;
  squeeze.interaction_f_min = 1.0;

  const PlantState init = make_initial_state(profile, no_squeeze);
  const Pose goal = rotated_goal(init.object_pose, 10.0);

  const EpisodeResult base = run_episode(profile, no_squeeze, ctrl, gains, goal);
  const EpisodeResult with = run_episode(profile, squeeze, ctrl, gains, goal);

  REQUIRE(base.converged);
  REQUIRE(with.converged);
  CHECK(rows_identical(base.log, with.log, 1e-12));

  double base_norm = 0.0, with_norm = 0.0;
  for (const Vec3& f : base.final_state.contact_forces) base_norm += f.norm();
  for (const Vec3& f : with.final_state.contact_forces) with_norm += f.norm();
  CHECK(base_norm == doctest::Approx(0.0));
  CHECK(with_norm > 1.0);

  // The assigned squeeze satisfies the normal-force floor and nets to zero.
  const auto& state = with.final_state;
  std::vector<Contact> contacts;
  for (const Vec3& p_obj : state.contact_points_object_frame) {
    Contact c;
    c.r = state.object_pose.rotation * p_obj;
    c.inward_normal = state.object_pose.rotation *
                      with.effective_shape.inward_normal_at(p_obj);
    contacts.push_back(c);
  }
  const GraspMatrix grasp = build_grasp_matrix(contacts);
  VecX stacked(3 * grasp.contact_count());
  for (Eigen::Index i = 0; i < grasp.contact_count(); ++i) {
    stacked.segment<3>(3 * i) = state.contact_forces[static_cast<std::size_t>(i)];
    CHECK(contacts[static_cast<std::size_t>(i)].inward_normal.dot(
              state.contact_forces[static_cast<std::size_t>(i)]) >= 1.0 - 1e-6);
  }
  CHECK((grasp.G * stacked).norm() < 1e-9);
}

TEST_CASE("encoder quantization stays within half a resolution step") {
  const HandProfile profile = default_hand_profile();
  PlantConfig config;
  config.encoder_noise_seed = 7;
  PlantState state = make_initial_state(profile, config);
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const double res = profile.encoder_resolution_deg * kDeg;

  for (int trial = 0; trial < 20; ++trial) {
    for (Eigen::Index j = 0; j < 16; ++j) state.joints.q(j) += u(rng) * 1e-3;
    const JointState reported = reported_joints(state, profile, config);
    for (Eigen::Index j = 0; j < 16; ++j) {
      CHECK(std::abs(reported.q(j) - state.joints.q(j)) <= res / 2.0 + 1e-15);
    }
  }

  // Without a seed the readout is exact.
  PlantConfig clean;
  const JointState exact = reported_joints(state, profile, clean);
  CHECK((exact.q - state.joints.q).norm() == 0.0);
}

TEST_CASE("plant config validation") {
  PlantConfig bad;
  bad.viscous_gain = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  const HandProfile profile = default_hand_profile();
  PlantConfig config;
  PlantState state = make_initial_state(profile, config);
  CHECK_THROWS_AS(
      (void)step_plant(state, TorqueCommand::of(VecX::Zero(16)), 0.0, profile, config),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (void)step_plant(state, TorqueCommand::of(VecX::Zero(4)), 0.003, profile, config),
      std::invalid_argument);
}
