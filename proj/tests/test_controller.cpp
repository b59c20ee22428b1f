#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "teleop/controller.hpp"

using namespace teleop;

namespace {
constexpr double kDeg = M_PI / 180.0;
}

TEST_CASE("impedance torque law") {
  const Eigen::Index n = 4;
  const GainSet gains = GainSet::uniform(n, 2.0, 0.5);
  JointState state = JointState::zero(n);
  state.q = VecX::Constant(n, 0.3);
  state.qdot = VecX::Constant(n, -0.1);

  SUBCASE("zero error gives zero torque") {
    const TorqueCommand cmd = impedance_torque(gains, DynamicsTerms::zero(), state.q, state.qdot,
                                               VecX::Zero(n), state);
    CHECK(cmd.tau.norm() == 0.0);
    CHECK(!cmd.clamped.any());
  }

  SUBCASE("stiffness arithmetic") {
    const VecX q_des = state.q.array() + 0.1;
    const TorqueCommand cmd = impedance_torque(gains, DynamicsTerms::zero(), q_des, state.qdot,
                                               VecX::Zero(n), state);
    CHECK(cmd.tau.isApproxToConstant(0.2, 1e-12));
  }

  SUBCASE("gravity feedforward adds on top") {
    DynamicsTerms dyn;
    dyn.gravity = [](const VecX& q) { return VecX::Constant(q.size(), 0.05).eval(); };
    const TorqueCommand cmd =
        impedance_torque(gains, dyn, state.q, state.qdot, VecX::Zero(n), state);
    CHECK(cmd.tau.isApproxToConstant(0.05, 1e-12));
  }

  SUBCASE("mass term multiplies desired acceleration") {
    DynamicsTerms dyn;
    dyn.mass = [](const VecX& q) { return MatX(2.0 * MatX::Identity(q.size(), q.size())); };
    const VecX qdd = VecX::Constant(n, 0.25);
    const TorqueCommand cmd = impedance_torque(gains, dyn, state.q, state.qdot, qdd, state);
    CHECK(cmd.tau.isApproxToConstant(0.5, 1e-12));
  }

  SUBCASE("size mismatch throws") {
    CHECK_THROWS_AS((void)impedance_torque(gains, DynamicsTerms::zero(), VecX::Zero(3),
                                           state.qdot, VecX::Zero(n), state),
                    std::invalid_argument);
  }
}

TEST_CASE("impedance torque is linear in the error") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Index n = 16;
  GainSet gains = GainSet::uniform(n, 5.0, 0.1);
  JointState state = JointState::zero(n);

  VecX e(n), edot(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e(i) = u(rng);
    edot(i) = u(rng);
  }
  const auto torque_for = [&](double lambda) {
    return impedance_torque(gains, DynamicsTerms::zero(), lambda * e, lambda * edot,
                            VecX::Zero(n), state)
        .tau;
  };
  CHECK((torque_for(2.5) - 2.5 * torque_for(1.0)).norm() < 1e-12);
  CHECK((torque_for(-0.3) + 0.3 * torque_for(1.0)).norm() < 1e-12);
}

TEST_CASE("clamp_torque saturates at the table limits") {
  const HandProfile profile = default_hand_profile();
  VecX tau = VecX::Zero(16);
  tau(12) = 0.6;  // thumb joint 1 limit is 0.437

  TorqueCommand cmd = clamp_torque(TorqueCommand::of(tau), profile);
  CHECK(cmd.tau(12) == doctest::Approx(0.437));
  CHECK(cmd.clamped(12));

  tau(12) = -0.6;
  cmd = clamp_torque(TorqueCommand::of(tau), profile);
  CHECK(cmd.tau(12) == doctest::Approx(-0.437));
  CHECK(cmd.clamped(12));

  tau(12) = 0.1;
  cmd = clamp_torque(TorqueCommand::of(tau), profile);
  CHECK(cmd.tau(12) == doctest::Approx(0.1));
  CHECK(!cmd.clamped(12));
}

TEST_CASE("clamp_torque is idempotent") {
  const HandProfile profile = default_hand_profile();
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VecX tau(16);
  for (Eigen::Index i = 0; i < 16; ++i) tau(i) = u(rng);
  const TorqueCommand once = clamp_torque(TorqueCommand::of(tau), profile);
  const TorqueCommand twice = clamp_torque(once, profile);
  CHECK((once.tau - twice.tau).norm() == 0.0);
  CHECK((once.clamped == twice.clamped).all());
}

TEST_CASE("squeeze_targets geometry") {
  SUBCASE("zero depth keeps targets on the surface") {
    const ObjectShape sphere = ObjectShape::sphere(0.05);
    const std::vector<Vec3> contacts = {Vec3(0.05, 0, 0), Vec3(0, 0.05, 0)};
    const auto targets = squeeze_targets(sphere, contacts, 0.0);
    CHECK((targets[0] - contacts[0]).norm() == 0.0);
    CHECK((targets[1] - contacts[1]).norm() == 0.0);
  }

  SUBCASE("sphere target moves along the contact radius") {
    const ObjectShape sphere = ObjectShape::sphere(0.05);
    const auto targets = squeeze_targets(sphere, {Vec3(0.05, 0, 0)}, 0.01);
    CHECK((targets[0] - Vec3(0.04, 0, 0)).norm() < 1e-15);
    CHECK(targets[0].norm() == doctest::Approx(0.04));
  }

  SUBCASE("box face targets follow the analytic face normal") {
    const ObjectShape box = ObjectShape::box(Vec3(0.03, 0.04, 0.05));
    // On the +x face: inward normal is -x.
    const auto targets = squeeze_targets(box, {Vec3(0.03, 0.01, -0.02)}, 0.005);
    CHECK((targets[0] - Vec3(0.025, 0.01, -0.02)).norm() < 1e-15);
    // On the -y face: inward normal is +y.
    const auto more = squeeze_targets(box, {Vec3(0.0, -0.04, 0.01)}, 0.01);
    CHECK((more[0] - Vec3(0.0, -0.03, 0.01)).norm() < 1e-15);
  }

  SUBCASE("depth beyond the inradius is rejected") {
    const ObjectShape sphere = ObjectShape::sphere(0.05);
    CHECK_THROWS_AS((void)squeeze_targets(sphere, {Vec3(0.05, 0, 0)}, 0.06),
                    std::invalid_argument);
    const ObjectShape box = ObjectShape::box(Vec3(0.02, 0.08, 0.08));
    CHECK_THROWS_AS((void)squeeze_targets(box, {Vec3(0.02, 0, 0)}, 0.03), std::invalid_argument);
  }
}

TEST_CASE("resolved_rate_step basics") {
  const HandProfile profile = default_hand_profile();
  JointState state = JointState::zero(16);
  state.q = default_grasp_posture(profile);

  const auto contacts = fingertip_contacts(profile, state.q, {0, 1, 3});
  const ObjectJacobian object_jac = object_jacobians(contacts);
  const MatX jac = stacked_jacobian_for_chains(profile, state.q, {0, 1, 3});

  ControllerConfig config;
  config.eta = 1.0;
  config.dt = 0.05;

  SUBCASE("zero twist keeps the configuration") {
    const ResolvedRateStep step =
        resolved_rate_step(jac, object_jac, Twist{}, state, config, profile);
    CHECK(step.qdot.norm() == 0.0);
    CHECK((step.q_des - state.q).norm() == 0.0);
  }

  SUBCASE("update scales with eta and dt") {
    Twist spin;
    spin.angular = Vec3(0, 0, 0.2);
    ControllerConfig half = config;
    half.eta = 0.5;
    const ResolvedRateStep full = resolved_rate_step(jac, object_jac, spin, state, config, profile);
    const ResolvedRateStep scaled = resolved_rate_step(jac, object_jac, spin, state, half, profile);
    CHECK((scaled.q_des - state.q - 0.5 * (full.q_des - state.q)).norm() < 1e-12);
    // eta = 1, dt = 0.05: q_des - q = 0.05 * qdot wherever limits allow.
    CHECK((full.q_des - state.q - 0.05 * full.qdot).norm() < 1e-12);
  }

  SUBCASE("least-squares residual is orthogonal to the Jacobian range") {
    Twist motion;
    motion.angular = Vec3(0.1, -0.2, 0.3);
    motion.linear = Vec3(0.01, 0.0, -0.02);
    const ResolvedRateStep step =
        resolved_rate_step(jac, object_jac, motion, state, config, profile);
    const VecX desired = object_jac.stacked * motion.vector();
    const VecX residual = jac * step.qdot - desired;
    // Normal equations: J^T residual = 0 for the least-squares solution.
    CHECK((jac.transpose() * residual).norm() < 1e-9 * std::max(1.0, desired.norm()));
  }

  SUBCASE("q_des respects joint limits") {
    Twist huge;
    huge.angular = Vec3(0, 0, 50.0);
    const ResolvedRateStep step =
        resolved_rate_step(jac, object_jac, huge, state, config, profile);
    for (Eigen::Index j = 0; j < 16; ++j) {
      const auto& lim = profile.joint_limits_deg[static_cast<std::size_t>(j)];
      CHECK(step.q_des(j) >= lim[0] * kDeg - 1e-12);
      CHECK(step.q_des(j) <= lim[1] * kDeg + 1e-12);
    }
  }
}

TEST_CASE("controller config validation") {
  ControllerConfig bad;
  bad.eta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.eta = 2.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.eta = 0.5;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.dt = 0.05;
  CHECK_NOTHROW(bad.validate());
}
