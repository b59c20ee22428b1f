#ifndef TELEOP_SE3_HPP
#define TELEOP_SE3_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace teleop {

template <typename S> using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S> using Mat3T = Eigen::Matrix<S, 3, 3>;

using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Scale factor for the singular-value rank threshold used by all
/// SVD-backed operations: tau = max(rows, cols) * sigma_max * rank_epsilon().
/// Set once at startup if a different cutoff is needed.
inline double& rank_epsilon() {
  static double eps = 1e-12;
  return eps;
}

/// Cross-product matrix: skew(r) * x == r.cross(x).
template <typename S>
[[nodiscard]] Mat3T<S> skew(const Vec3T<S>& r) {
  Mat3T<S> m;
  // clang-format off
  m <<  S(0),  -r.z(),  r.y(),
        r.z(),  S(0),  -r.x(),
       -r.y(),  r.x(),  S(0);
  // clang-format on
  return m;
}

/// Rotation matrix for a rotation vector (axis * angle).
/// R = I + E sin(theta) + E^2 (1 - cos(theta)) with E = skew(v / theta);
/// below theta = 1e-9 a second-order series keeps R orthonormal.
template <typename S>
[[nodiscard]] Mat3T<S> rodrigues_exp(const Vec3T<S>& rotation_vector) {
  const S theta = rotation_vector.norm();
  if (theta < S(1e-9)) {
    const Mat3T<S> w = skew(rotation_vector);
    return Mat3T<S>::Identity() + w + S(0.5) * w * w;
  }
  const Mat3T<S> axis_hat = skew<S>(rotation_vector / theta);
  return Mat3T<S>::Identity() + std::sin(theta) * axis_hat +
         (S(1) - std::cos(theta)) * axis_hat * axis_hat;
}

/// Inverse of rodrigues_exp. Canonical output has norm in [0, pi].
/// Throws std::invalid_argument when R is not orthonormal within 1e-6.
template <typename S>
[[nodiscard]] Vec3T<S> rotation_log(const Mat3T<S>& R) {
  const S ortho = (R.transpose() * R - Mat3T<S>::Identity()).template lpNorm<Eigen::Infinity>();
  if (ortho > S(1e-6) || std::abs(R.determinant() - S(1)) > S(1e-6)) {
    throw std::invalid_argument("rotation_log: input is not a proper rotation");
  }
  const S cos_theta = std::clamp((R.trace() - S(1)) / S(2), S(-1), S(1));
  const S theta = std::acos(cos_theta);
  Vec3T<S> vee(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (theta < S(1e-9)) {
    return S(0.5) * vee;
  }
  if (theta < S(M_PI) - S(1e-4)) {
    return (theta / (S(2) * std::sin(theta))) * vee;
  }
  // Near pi the vee vector degenerates; recover the axis from the the
  // symmetric part and fix signs with the off-diagonal terms.
  Vec3T<S> axis;
  const Mat3T<S> B = (R + Mat3T<S>::Identity()) * S(0.5);
  int k;
  B.diagonal().maxCoeff(&k);
  axis = B.col(k) / std::sqrt(B(k, k));
  axis.normalize();
  Vec3T<S> candidate = theta * axis;
  // vee = 2 sin(theta) * axis fixes the overall sign when sin(theta) != 0.
  if (vee.dot(axis) < S(0)) candidate = -candidate;
  return candidate;
}

/// Rigid pose: rotation plus origin, composing as 4x4 homogeneous transforms.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();

  [[nodiscard]] static Pose identity() { return {}; }

  [[nodiscard]] Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.origin + origin};
  }

  [[nodiscard]] Pose inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * origin)};
  }

  [[nodiscard]] Vec3 apply(const Vec3& p) const { return rotation * p + origin; }

  [[nodiscard]] Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = origin;
    return m;
  }

  [[nodiscard]] static Pose from_matrix(const Eigen::Matrix4d& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  }

  /// max(|R^T R - I|_inf, |det R - 1|); zero for a valid pose.
  [[nodiscard]] double orthonormality_error() const {
    const double o = (rotation.transpose() * rotation - Mat3::Identity())
                         .lpNorm<Eigen::Infinity>();
    return std::max(o, std::abs(rotation.determinant() - 1.0));
  }
};

/// Rigid-body velocity. Component order is angular-first, [omega; v],
/// matching the point-velocity map v_i = v + omega x r_i used throughout.
/// External linear-first consumers go through the *_linear_first converters.
struct Twist {
  Vec3 angular = Vec3::Zero();  // rad/s
  Vec3 linear = Vec3::Zero();   // m/s

  [[nodiscard]] Vec6 vector() const {
    Vec6 v;
    v << angular, linear;
    return v;
  }
  [[nodiscard]] static Twist from_vector(const Vec6& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  [[nodiscard]] Vec6 linear_first() const {
    Vec6 v;
    v << linear, angular;
    return v;
  }
  [[nodiscard]] static Twist from_linear_first(const Vec6& v) {
    return {v.tail<3>(), v.head<3>()};
  }
};

/// Finite screw motion: rotation vector (rad) plus translation (m).
struct ScrewDisplacement {
  Vec3 rotation_vector = Vec3::Zero();
  Vec3 translation = Vec3::Zero();
};

/// Full SVD of a dense matrix plus the rank decision made from it.
struct SvdResult {
  VecX singular_values;  // descending
  MatX U;                // full left factor
  MatX V;                // full right factor
  double rank_tolerance = 0.0;
  Eigen::Index rank = 0;
};

[[nodiscard]] SvdResult svd_decompose(const MatX& A);

/// Moore-Penrose pseudoinverse with rank decided by
/// tau = max(m, n) * sigma_max * rank_epsilon().
[[nodiscard]] MatX pseudoinverse(const MatX& A);

/// Orthonormal basis of the null space of A, one basis vector per column;
/// zero columns when A has full column rank.
[[nodiscard]] MatX null_space_basis(const MatX& A);

/// Constant twist that carries `from` to `to` in `duration` seconds when the
/// rotation is integrated exponentially and the origin linearly.
/// Throws std::invalid_argument for duration <= 0.
[[nodiscard]] Twist screw_between_poses(const Pose& from, const Pose& to, double duration);

/// Integrate a constant twist for dt seconds: exact exponential on the
/// rotation, linear on the origin. Inverse of screw_between_poses.
[[nodiscard]] Pose apply_twist(const Pose& pose, const Twist& twist, double dt);

}  // namespace teleop

#endif  // TELEOP_SE3_HPP
