#ifndef TELEOP_HAND_MODEL_HPP
#define TELEOP_HAND_MODEL_HPP

#include <array>
#include <string>
#include <vector>

#include "teleop/grasp.hpp"
#include "teleop/se3.hpp"

namespace teleop {

/// Denavit-Hartenberg row for one revolute joint.
struct DhParam {
  double a = 0.0;             // m
  double alpha = 0.0;         // rad
  double d = 0.0;             // m
  double theta_offset = 0.0;  // rad
};

struct SerialChain {
  Pose base_pose;
  std::vector<DhParam> joints;

  [[nodiscard]] Eigen::Index joint_count() const {
    return static_cast<Eigen::Index>(joints.size());
  }
};

/// Device description for a tree-type hand of p serial chains.
/// Joint arrays are chain-major (chain 0 joints first).
struct HandProfile {
  std::string name;
  std::vector<SerialChain> chains;
  std::vector<std::array<double, 2>> joint_limits_deg;  // per joint, min < max
  VecX torque_limits_nm;                                // per joint, symmetric +-
  double gear_ratio = 1.0;
  double torque_rate_hz = 0.0;   // inner impedance loop
  double rrm_rate_hz = 0.0;      // outer resolved-rate loop
  double encoder_resolution_deg = 0.0;

  [[nodiscard]] Eigen::Index chain_count() const {
    return static_cast<Eigen::Index>(chains.size());
  }
  [[nodiscard]] Eigen::Index total_joints() const;
  /// Index of the first joint of `chain` in the chain-major joint vector.
  [[nodiscard]] Eigen::Index joint_offset(Eigen::Index chain) const;

  /// Throws std::invalid_argument on inconsistent array sizes or limits.
  void validate() const;
};

struct JointState {
  VecX q;     // rad
  VecX qdot;  // rad/s

  [[nodiscard]] static JointState zero(Eigen::Index n) {
    return {VecX::Zero(n), VecX::Zero(n)};
  }
};

/// Rigid-body map from an object twist to fingertip twists. Block i is
/// [[I, 0], [-skew(r_i), I]] under angular-first twist ordering.
struct ObjectJacobian {
  std::vector<Mat6> blocks;  // per contact, 6x6
  MatX stacked;              // 6p x 6
};

/// Parses a hand-profile JSON document (see data/allegro_like.json).
/// Throws std::invalid_argument on malformed or inconsistent content.
[[nodiscard]] HandProfile parse_hand_profile_json(const std::string& text);

/// Loads and validates a profile file. Throws std::runtime_error when the
/// file cannot be read, std::invalid_argument when it fails validation.
[[nodiscard]] HandProfile load_hand_profile(const std::string& path);

/// Serializes a profile to the same JSON schema accepted by the loader.
[[nodiscard]] std::string hand_profile_to_json(const HandProfile& profile);

/// Built-in 4-chain x 4-joint profile with the bundled limit and rate
/// tables. The DH geometry is a synthetic stand-in with roughly 0.11 m
/// chains; only the limit/rate tables follow the reference hardware.
[[nodiscard]] HandProfile default_hand_profile();

/// Fingertip pose of one chain (last DH frame).
[[nodiscard]] Pose forward_kinematics(const SerialChain& chain, const VecX& q);

/// Geometric Jacobian of the fingertip, angular-first: column j is
/// [z_j; z_j x (p_tip - p_j)] in the base frame.
[[nodiscard]] MatX chain_jacobian(const SerialChain& chain, const VecX& q);

/// Block-diagonal stack of all chain Jacobians, 6p x k.
[[nodiscard]] MatX stacked_jacobian(const HandProfile& profile, const VecX& q);

/// Rows of the stacked Jacobian for a subset of chains, keeping all k
/// columns (columns of unlisted chains are zero).
[[nodiscard]] MatX stacked_jacobian_for_chains(const HandProfile& profile, const VecX& q,
                                               const std::vector<Eigen::Index>& chain_ids);

/// Object-to-fingertip twist map for the given contact set.
[[nodiscard]] ObjectJacobian object_jacobians(const std::vector<Contact>& contacts);

/// Minimum-norm object twist whose rigid point-velocity field best matches
/// the stacked fingertip twists. Single mechanism behind both the plant
/// update and the intent estimate.
[[nodiscard]] Twist min_norm_object_twist(const VecX& stacked_fingertip_twists,
                                          const ObjectJacobian& object_jac);

/// Per-joint clamp of q (rad) to the profile's limits. Idempotent.
[[nodiscard]] VecX clamp_to_joint_limits(const HandProfile& profile, const VecX& q);

/// Flexed posture used as the nominal grasp configuration.
[[nodiscard]] VecX default_grasp_posture(const HandProfile& profile);

/// Fingertip contact set for the given chains at configuration q: offsets
/// are taken about the fingertip centroid and the normals point at it.
[[nodiscard]] std::vector<Contact> fingertip_contacts(const HandProfile& profile, const VecX& q,
                                                      const std::vector<Eigen::Index>& chains,
                                                      Vec3* centroid = nullptr);

/// Slice of the chain-major joint vector belonging to one chain.
[[nodiscard]] VecX chain_slice(const HandProfile& profile, const VecX& q, Eigen::Index chain);

}  // namespace teleop

#endif  // TELEOP_HAND_MODEL_HPP
