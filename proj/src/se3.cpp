#include "teleop/se3.hpp"

#include <Eigen/SVD>

namespace teleop {

SvdResult svd_decompose(const MatX& A) {
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdResult out;
  out.singular_values = svd.singularValues();
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  const double sigma_max = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  out.rank_tolerance =
      static_cast<double>(std::max(A.rows(), A.cols())) * sigma_max * rank_epsilon();
  out.rank = (out.singular_values.array() > out.rank_tolerance).count();
  return out;
}

MatX pseudoinverse(const MatX& A) {
  const SvdResult s = svd_decompose(A);
  MatX sigma_inv = MatX::Zero(A.cols(), A.rows());
  for (Eigen::Index i = 0; i < s.rank; ++i) {
    sigma_inv(i, i) = 1.0 / s.singular_values(i);
  }
  return s.V * sigma_inv * s.U.transpose();
}

MatX null_space_basis(const MatX& A) {
  const SvdResult s = svd_decompose(A);
  return s.V.rightCols(A.cols() - s.rank);
}

Twist screw_between_poses(const Pose& from, const Pose& to, double duration) {
  if (!(duration > 0.0)) {
    throw std::invalid_argument("screw_between_poses: duration must be positive");
  }
  Twist t;
  t.angular = rotation_log<double>(to.rotation * from.rotation.transpose()) / duration;
  t.linear = (to.origin - from.origin) / duration;
  return t;
}

Pose apply_twist(const Pose& pose, const Twist& twist, double dt) {
  Pose out;
  out.rotation = rodrigues_exp<double>(twist.angular * dt) * pose.rotation;
  out.origin = pose.origin + twist.linear * dt;
  return out;
}

}  // namespace teleop
