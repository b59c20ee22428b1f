#include "teleop/hand_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace teleop {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

Mat3 rot_x(double angle) {
  Mat3 r;
  const double c = std::cos(angle), s = std::sin(angle);
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rot_z(double angle) {
  Mat3 r;
  const double c = std::cos(angle), s = std::sin(angle);
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

/// A = RotZ(theta + offset) TransZ(d) TransX(a) RotX(alpha)
Pose dh_transform(const DhParam& p, double theta) {
  Pose out;
  const Mat3 rz = rot_z(theta + p.theta_offset);
  out.rotation = rz * rot_x(p.alpha);
  out.origin = rz * Vec3(p.a, 0.0, p.d);
  return out;
}

}  // namespace

Eigen::Index HandProfile::total_joints() const {
  Eigen::Index n = 0;
  for (const SerialChain& c : chains) n += c.joint_count();
  return n;
}

Eigen::Index HandProfile::joint_offset(Eigen::Index chain) const {
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < chain; ++i) n += chains[static_cast<std::size_t>(i)].joint_count();
  return n;
}

void HandProfile::validate() const {
  if (chains.empty()) throw std::invalid_argument("HandProfile: no chains");
  for (const SerialChain& c : chains) {
    if (c.joints.empty()) throw std::invalid_argument("HandProfile: chain without joints");
    if (c.base_pose.orthonormality_error() > 1e-9) {
      throw std::invalid_argument("HandProfile: chain base pose is not a rigid transform");
    }
  }
  const Eigen::Index k = total_joints();
  if (static_cast<Eigen::Index>(joint_limits_deg.size()) != k) {
    throw std::invalid_argument("HandProfile: joint_limits_deg must have one entry per joint");
  }
  if (torque_limits_nm.size() != k) {
    throw std::invalid_argument("HandProfile: torque_limits_nm must have one entry per joint");
  }
  for (const auto& lim : joint_limits_deg) {
    if (!(lim[0] < lim[1])) throw std::invalid_argument("HandProfile: joint limit min must be < max");
  }
  if ((torque_limits_nm.array() <= 0.0).any()) {
    throw std::invalid_argument("HandProfile: torque limits must be positive");
  }
  if (!(torque_rate_hz > 0.0) || !(rrm_rate_hz > 0.0)) {
    throw std::invalid_argument("HandProfile: loop rates must be positive");
  }
}

HandProfile parse_hand_profile_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("hand profile: invalid JSON: ") + e.what());
  }
  HandProfile p;
  try {
    p.name = j.at("name").get<std::string>();
    for (const auto& jc : j.at("chains")) {
      SerialChain chain;
      const auto mat = jc.at("base_pose").get<std::vector<double>>();
      if (mat.size() != 16) {
        throw std::invalid_argument("hand profile: base_pose must be a row-major 4x4 (16 values)");
      }
      Eigen::Matrix4d m;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = mat[static_cast<std::size_t>(4 * r + c)];
      chain.base_pose = Pose::from_matrix(m);
      for (const auto& jd : jc.at("dh")) {
        DhParam d;
        d.a = jd.at("a_m").get<double>();
        d.alpha = jd.at("alpha_rad").get<double>();
        d.d = jd.at("d_m").get<double>();
        d.theta_offset = jd.at("theta_offset_rad").get<double>();
        chain.joints.push_back(d);
      }
      p.chains.push_back(std::move(chain));
    }
    for (const auto& jl : j.at("joint_limits_deg")) {
      const auto pair = jl.get<std::vector<double>>();
      if (pair.size() != 2) throw std::invalid_argument("hand profile: each joint limit is [min, max]");
      p.joint_limits_deg.push_back({pair[0], pair[1]});
    }
    const auto torques = j.at("torque_limits_nm").get<std::vector<double>>();
    p.torque_limits_nm = Eigen::Map<const VecX>(torques.data(), static_cast<Eigen::Index>(torques.size()));
    p.gear_ratio = j.at("gear_ratio").get<double>();
    p.torque_rate_hz = j.at("torque_rate_hz").get<double>();
    p.rrm_rate_hz = j.at("rrm_rate_hz").get<double>();
    p.encoder_resolution_deg = j.at("encoder_resolution_deg").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("hand profile: missing or mistyped field: ") + e.what());
  }
  p.validate();
  return p;
}

HandProfile load_hand_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hand profile: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_hand_profile_json(ss.str());
}

std::string hand_profile_to_json(const HandProfile& profile) {
  nlohmann::json j;
  j["name"] = profile.name;
  for (const SerialChain& c : profile.chains) {
    nlohmann::json jc;
    std::vector<double> mat(16);
    const Eigen::Matrix4d m = c.base_pose.matrix();
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 4; ++col) mat[static_cast<std::size_t>(4 * r + col)] = m(r, col);
    jc["base_pose"] = mat;
    for (const DhParam& d : c.joints) {
      jc["dh"].push_back({{"a_m", d.a},
                          {"alpha_rad", d.alpha},
                          {"d_m", d.d},
                          {"theta_offset_rad", d.theta_offset}});
    }
    j["chains"].push_back(jc);
  }
  for (const auto& lim : profile.joint_limits_deg) {
    j["joint_limits_deg"].push_back({lim[0], lim[1]});
  }
  j["torque_limits_nm"] =
      std::vector<double>(profile.torque_limits_nm.data(),
                          profile.torque_limits_nm.data() + profile.torque_limits_nm.size());
  j["gear_ratio"] = profile.gear_ratio;
  j["torque_rate_hz"] = profile.torque_rate_hz;
  j["rrm_rate_hz"] = profile.rrm_rate_hz;
  j["encoder_resolution_deg"] = profile.encoder_resolution_deg;
  return j.dump(2);
}

HandProfile default_hand_profile() {
  HandProfile p;
  p.name = "allegro_like";

  // Finger template: one abduction joint followed by three flexion joints,
  // links summing to 0.11 m. Synthetic geometry; only the limit and rate
  // tables below follow the hardware datasheet values.
  const auto finger_joints = [] {
    return std::vector<DhParam>{
        {0.0, M_PI / 2.0, 0.0, 0.0},
        {0.045, 0.0, 0.0, 0.0},
        {0.035, 0.0, 0.0, 0.0},
        {0.030, 0.0, 0.0, 0.0},
    };
  };

  for (int i = 0; i < 3; ++i) {
    SerialChain finger;
    finger.base_pose.origin = Vec3(0.0, 0.045 * (1 - i), 0.0);
    finger.joints = finger_joints();
    p.chains.push_back(std::move(finger));
  }

  SerialChain thumb;
  thumb.base_pose.origin = Vec3(0.105, 0.0, 0.095);
  thumb.base_pose.rotation = rot_z(M_PI);  // points back toward the palm
  thumb.joints = finger_joints();
  p.chains.push_back(std::move(thumb));

  const std::array<double, 4> finger_mmr = {66.84, 116.52, 119.40, 116.863};
  const std::array<double, 4> thumb_mmr = {64.9, 84.11, 116.52, 119.302};
  const std::array<double, 4> finger_lt = {0.312, 0.562, 0.375, 0.238};
  const std::array<double, 4> thumb_lt = {0.437, 0.337, 0.225, 0.225};

  p.torque_limits_nm.resize(16);
  for (Eigen::Index chain = 0; chain < 4; ++chain) {
    const bool is_thumb = chain == 3;
    for (Eigen::Index joint = 0; joint < 4; ++joint) {
      const double mmr = is_thumb ? thumb_mmr[static_cast<std::size_t>(joint)]
                                  : finger_mmr[static_cast<std::size_t>(joint)];
      p.joint_limits_deg.push_back({-mmr / 2.0, mmr / 2.0});
      p.torque_limits_nm(4 * chain + joint) = is_thumb
                                                  ? thumb_lt[static_cast<std::size_t>(joint)]
                                                  : finger_lt[static_cast<std::size_t>(joint)];
    }
  }

  p.gear_ratio = 369.0;
  p.torque_rate_hz = 333.0;
  p.rrm_rate_hz = 20.0;
  p.encoder_resolution_deg = 0.005;
  p.validate();
  return p;
}

Pose forward_kinematics(const SerialChain& chain, const VecX& q) {
  if (q.size() != chain.joint_count()) {
    throw std::invalid_argument("forward_kinematics: q size does not match chain");
  }
  Pose t = chain.base_pose;
  for (Eigen::Index j = 0; j < chain.joint_count(); ++j) {
    t = t * dh_transform(chain.joints[static_cast<std::size_t>(j)], q(j));
  }
  return t;
}

MatX chain_jacobian(const SerialChain& chain, const VecX& q) {
  if (q.size() != chain.joint_count()) {
    throw std::invalid_argument("chain_jacobian: q size does not match chain");
  }
  const Eigen::Index k = chain.joint_count();
  // Joint frame j-1 carries the axis of joint j.
  std::vector<Pose> frames(static_cast<std::size_t>(k));
  Pose t = chain.base_pose;
  for (Eigen::Index j = 0; j < k; ++j) {
    frames[static_cast<std::size_t>(j)] = t;
    t = t * dh_transform(chain.joints[static_cast<std::size_t>(j)], q(j));
  }
  const Vec3 tip = t.origin;
  MatX jac(6, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Vec3 axis = frames[static_cast<std::size_t>(j)].rotation.col(2);
    const Vec3 origin = frames[static_cast<std::size_t>(j)].origin;
    jac.col(j).head<3>() = axis;
    jac.col(j).tail<3>() = axis.cross(tip - origin);
  }
  return jac;
}

MatX stacked_jacobian(const HandProfile& profile, const VecX& q) {
  const Eigen::Index p = profile.chain_count();
  const Eigen::Index k = profile.total_joints();
  if (q.size() != k) throw std::invalid_argument("stacked_jacobian: q size does not match profile");
  MatX jac = MatX::Zero(6 * p, k);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Index off = profile.joint_offset(i);
    const Eigen::Index ki = profile.chains[static_cast<std::size_t>(i)].joint_count();
    jac.block(6 * i, off, 6, ki) =
        chain_jacobian(profile.chains[static_cast<std::size_t>(i)], q.segment(off, ki));
  }
  return jac;
}

MatX stacked_jacobian_for_chains(const HandProfile& profile, const VecX& q,
                                 const std::vector<Eigen::Index>& chain_ids) {
  const Eigen::Index k = profile.total_joints();
  if (q.size() != k) {
    throw std::invalid_argument("stacked_jacobian_for_chains: q size does not match profile");
  }
  MatX jac = MatX::Zero(6 * static_cast<Eigen::Index>(chain_ids.size()), k);
  for (std::size_t row = 0; row < chain_ids.size(); ++row) {
    const Eigen::Index i = chain_ids[row];
    if (i < 0 || i >= profile.chain_count()) {
      throw std::invalid_argument("stacked_jacobian_for_chains: chain index out of range");
    }
    const Eigen::Index off = profile.joint_offset(i);
    const Eigen::Index ki = profile.chains[static_cast<std::size_t>(i)].joint_count();
    jac.block(6 * static_cast<Eigen::Index>(row), off, 6, ki) =
        chain_jacobian(profile.chains[static_cast<std::size_t>(i)], q.segment(off, ki));
  }
  return jac;
}

ObjectJacobian object_jacobians(const std::vector<Contact>& contacts) {
  if (contacts.empty()) throw std::invalid_argument("object_jacobians: at least one contact required");
  ObjectJacobian out;
  const auto p = static_cast<Eigen::Index>(contacts.size());
  out.stacked = MatX::Zero(6 * p, 6);
  for (Eigen::Index i = 0; i < p; ++i) {
    Mat6 block = Mat6::Identity();
    block.bottomLeftCorner<3, 3>() = -skew<double>(contacts[static_cast<std::size_t>(i)].r);
    out.blocks.push_back(block);
    out.stacked.block<6, 6>(6 * i, 0) = block;
  }
  return out;
}

Twist min_norm_object_twist(const VecX& stacked_fingertip_twists,
                            const ObjectJacobian& object_jac) {
  if (stacked_fingertip_twists.size() != object_jac.stacked.rows()) {
    throw std::invalid_argument("min_norm_object_twist: size mismatch");
  }
  return Twist::from_vector(pseudoinverse(object_jac.stacked) * stacked_fingertip_twists);
}

VecX clamp_to_joint_limits(const HandProfile& profile, const VecX& q) {
  if (q.size() != profile.total_joints()) {
    throw std::invalid_argument("clamp_to_joint_limits: q size does not match profile");
  }
  VecX out = q;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    const auto& lim = profile.joint_limits_deg[static_cast<std::size_t>(j)];
    out(j) = std::clamp(q(j), lim[0] * kDegToRad, lim[1] * kDegToRad);
  }
  return out;
}

VecX default_grasp_posture(const HandProfile& profile) {
  VecX q = VecX::Zero(profile.total_joints());
  for (Eigen::Index chain = 0; chain < profile.chain_count(); ++chain) {
    const Eigen::Index off = profile.joint_offset(chain);
    const Eigen::Index k = profile.chains[static_cast<std::size_t>(chain)].joint_count();
    for (Eigen::Index j = 1; j < k; ++j) {
      q(off + j) = 25.0 * kDegToRad;  // flex everything but the abduction joint
    }
  }
  return clamp_to_joint_limits(profile, q);
}

std::vector<Contact> fingertip_contacts(const HandProfile& profile, const VecX& q,
                                        const std::vector<Eigen::Index>& chains, Vec3* centroid) {
  if (chains.empty()) throw std::invalid_argument("fingertip_contacts: no chains given");
  std::vector<Vec3> tips;
  for (const Eigen::Index chain : chains) {
    if (chain < 0 || chain >= profile.chain_count()) {
      throw std::invalid_argument("fingertip_contacts: chain index out of range");
    }
    tips.push_back(forward_kinematics(profile.chains[static_cast<std::size_t>(chain)],
                                      chain_slice(profile, q, chain))
                       .origin);
  }
  Vec3 center = Vec3::Zero();
  for (const Vec3& t : tips) center += t;
  center /= static_cast<double>(tips.size());
  if (centroid) *centroid = center;

  std::vector<Contact> contacts;
  contacts.reserve(tips.size());
  for (const Vec3& t : tips) {
    Contact c;
    c.r = t - center;
    const double dist = c.r.norm();
    c.inward_normal = dist > 1e-12 ? Vec3(-c.r / dist) : Vec3::UnitZ();
    contacts.push_back(c);
  }
  return contacts;
}

VecX chain_slice(const HandProfile& profile, const VecX& q, Eigen::Index chain) {
  if (chain < 0 || chain >= profile.chain_count()) {
    throw std::invalid_argument("chain_slice: chain index out of range");
  }
  return q.segment(profile.joint_offset(chain),
                   profile.chains[static_cast<std::size_t>(chain)].joint_count());
}

}  // namespace teleop
