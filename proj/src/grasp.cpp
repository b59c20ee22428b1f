#include "teleop/grasp.hpp"

#include <Eigen/Eigenvalues>
#include <string>

namespace teleop {

void ObjectInertia::validate() const {
  if (!(mass > 0.0)) {
    throw std::invalid_argument("ObjectInertia: mass must be positive");
  }
  if ((inertia - inertia.transpose()).lpNorm<Eigen::Infinity>() > 1e-12) {
    throw std::invalid_argument("ObjectInertia: inertia tensor must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("ObjectInertia: inertia tensor must be positive definite");
  }
}

VecX ForceSolution::stacked_total() const {
  VecX f(3 * static_cast<Eigen::Index>(particular.size()));
  for (std::size_t i = 0; i < particular.size(); ++i) {
    f.segment<3>(3 * static_cast<Eigen::Index>(i)) = particular[i];
  }
  if (alpha.size() > 0) f += null_basis * alpha;
  return f;
}

Vec3 ForceSolution::force_at(Eigen::Index i) const {
  return stacked_total().segment<3>(3 * i);
}

VecX ForceSolution::stacked_interaction() const {
  if (alpha.size() == 0) {
    return VecX::Zero(3 * static_cast<Eigen::Index>(particular.size()));
  }
  return null_basis * alpha;
}

GraspMatrix build_grasp_matrix(const std::vector<Contact>& contacts) {
  if (contacts.empty()) {
    throw std::invalid_argument("build_grasp_matrix: at least one contact required");
  }
  const auto p = static_cast<Eigen::Index>(contacts.size());
  GraspMatrix out;
  out.contacts = contacts;
  out.G = MatX::Zero(6, 3 * p);
  for (Eigen::Index i = 0; i < p; ++i) {
    out.G.block<3, 3>(0, 3 * i) = Mat3::Identity();
    out.G.block<3, 3>(3, 3 * i) = skew<double>(contacts[static_cast<std::size_t>(i)].r);
  }
  return out;
}

Wrench object_wrench(const ObjectInertia& inertia, const Vec3& linear_accel,
                     const Vec3& angular_accel) {
  Wrench w;
  w.force = inertia.mass * linear_accel;
  w.moment = inertia.inertia * angular_accel +
             inertia.angular_velocity.cross(inertia.inertia * inertia.angular_velocity);
  return w;
}

ForceSolution force_decompose(const GraspMatrix& grasp, const Wrench& wrench) {
  const Eigen::Index p = grasp.contact_count();
  const VecX stacked = pseudoinverse(grasp.G) * wrench.vector();
  ForceSolution sol;
  sol.particular.resize(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    sol.particular[static_cast<std::size_t>(i)] = stacked.segment<3>(3 * i);
  }
  sol.null_basis = null_space_basis(grasp.G);
  sol.alpha = VecX::Zero(sol.null_basis.cols());
  return sol;
}

namespace {

/// Columns are stacked 3p-vectors, one per fingertip pair (i, j): +u at
/// contact i and -u at contact j with u the unit vector from i to j. Each
/// column carries zero net wrench, so they all lie in NS(G).
MatX joining_line_directions(const std::vector<Contact>& contacts) {
  const auto p = static_cast<Eigen::Index>(contacts.size());
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      pairs.emplace_back(i, j);
    }
  }
  MatX L = MatX::Zero(3 * p, static_cast<Eigen::Index>(pairs.size()));
  Eigen::Index col = 0;
  for (const auto& [i, j] : pairs) {
    const Vec3 d = contacts[static_cast<std::size_t>(j)].r - contacts[static_cast<std::size_t>(i)].r;
    const double len = d.norm();
    if (len < 1e-12) {
      throw std::runtime_error("select_interaction_forces: coincident contacts");
    }
    const Vec3 u = d / len;
    L.col(col).segment<3>(3 * i) = u;
    L.col(col).segment<3>(3 * j) = -u;
    ++col;
  }
  return L;
}

}  // namespace

ForceSolution select_interaction_forces(const ForceSolution& solution, const GraspMatrix& grasp,
                                        double f_min) {
  if (f_min < 0.0) {
    throw std::invalid_argument("select_interaction_forces: f_min must be non-negative");
  }
  const Eigen::Index p = grasp.contact_count();
  if (p < 2) {
    throw std::invalid_argument("select_interaction_forces: needs at least two contacts");
  }
  for (const Contact& c : grasp.contacts) {
    if (std::abs(c.inward_normal.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("select_interaction_forces: contact normal must be unit length");
    }
  }

  const MatX L = joining_line_directions(grasp.contacts);

  // Normal component of each squeeze direction at each contact.
  MatX A(p, L.cols());
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index c = 0; c < L.cols(); ++c) {
      A(i, c) = grasp.contacts[static_cast<std::size_t>(i)].inward_normal.dot(
          L.col(c).segment<3>(3 * i));
    }
  }
  VecX base(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    base(i) =
        grasp.contacts[static_cast<std::size_t>(i)].inward_normal.dot(solution.particular[static_cast<std::size_t>(i)]);
  }

  constexpr double kSlack = 1e-9;
  // Active-set rounds: fit beta so deficient contacts reach f_min exactly,
  // re-checking contacts the fit may have pushed below the bound.
  std::vector<bool> active(static_cast<std::size_t>(p), false);
  VecX beta = VecX::Zero(L.cols());
  for (Eigen::Index round = 0; round <= p; ++round) {
    const VecX normal_components = base + A * beta;
    bool grew = false;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!active[static_cast<std::size_t>(i)] && normal_components(i) < f_min - kSlack) {
        active[static_cast<std::size_t>(i)] = true;
        grew = true;
      }
    }
    if (!grew) break;

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (active[static_cast<std::size_t>(i)]) rows.push_back(i);
    }
    MatX As(static_cast<Eigen::Index>(rows.size()), A.cols());
    VecX ts(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index k = 0; k < As.rows(); ++k) {
      As.row(k) = A.row(rows[static_cast<std::size_t>(k)]);
      ts(k) = f_min - base(rows[static_cast<std::size_t>(k)]);
    }
    beta = pseudoinverse(As) * ts;
  }

  const VecX normal_components = base + A * beta;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (normal_components(i) < f_min - 1e-6) {
      throw std::runtime_error(
          "select_interaction_forces: infeasible squeeze, contact " + std::to_string(i) +
          " reaches only " + std::to_string(normal_components(i)) + " N of " +
          std::to_string(f_min) + " N along its inward normal");
    }
  }

  // Express the squeeze in the orthonormal null basis. L's columns lie in
  // NS(G), so the projection is lossless.
  ForceSolution out = solution;
  const VecX interaction = L * beta;
  out.alpha = solution.null_basis.transpose() * interaction;
  return out;
}

}  // namespace teleop
