#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "posesync/errors.hpp"

namespace posesync {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Default tolerances. Functions that consume them take an explicit
/// parameter defaulting to these values so tests can tighten or relax.
namespace tol {
inline constexpr double orthonormality = 1e-9;   // R^T R = I and det(R) = 1
inline constexpr double unit_axis = 1e-9;        // |norm(u) - 1|
inline constexpr double tangent_pattern = 1e-9;  // se(3) sparsity in vee()
inline constexpr double small_angle = 1e-4;      // Taylor switch in screw translation
}  // namespace tol

/// Body-frame group velocity xi = (omega, v) in R^6.
struct Twist {
  Vec3 omega = Vec3::Zero();
  Vec3 vel = Vec3::Zero();

  Twist() = default;
  Twist(const Vec3& w, const Vec3& v) : omega(w), vel(v) {}
  explicit Twist(const Vec6& x) : omega(x.head<3>()), vel(x.tail<3>()) {}

  Vec6 vec() const {
    Vec6 x;
    x << omega, vel;
    return x;
  }

  static Twist Zero() { return Twist{}; }
};

/// Skew-symmetric matrix y^x such that y^x z = y x z.
inline Mat3 skew(const Vec3& y) {
  Mat3 m;
  m << 0.0, -y.z(), y.y(),
       y.z(), 0.0, -y.x(),
       -y.y(), y.x(), 0.0;
  return m;
}

/// psi(A) = 1/2 (a32-a23, a13-a31, a21-a12); the unique vector with
/// tr(A^T y^x) = 2 y^T psi(A) for all y.
inline Vec3 psi(const Mat3& a) {
  return 0.5 * Vec3(a(2, 1) - a(1, 2), a(0, 2) - a(2, 0), a(1, 0) - a(0, 1));
}

inline bool is_rotation(const Mat3& r, double tolerance = tol::orthonormality) {
  return (r.transpose() * r - Mat3::Identity()).norm() <= tolerance &&
         std::abs(r.determinant() - 1.0) <= tolerance;
}

/// Rigid transform (R, p), the 4x4 homogeneous matrix [[R, p], [0, 1]].
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  Pose() = default;
  Pose(const Mat3& rot, const Vec3& trans) : R(rot), p(trans) {}

  static Pose Identity() { return Pose{}; }

  /// Homogeneous embedding; the last row is (0,0,0,1) exactly.
  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = p;
    return m;
  }

  /// Reads the (R, p) blocks; the caller owns any validity check.
  static Pose from_matrix(const Mat4& m) {
    return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
  }

  Pose operator*(const Pose& other) const {
    return Pose(R * other.R, R * other.p + p);
  }

  Pose inverse() const { return Pose(R.transpose(), -(R.transpose() * p)); }
};

inline Pose compose(const Pose& x, const Pose& y) { return x * y; }

inline Pose inverse(const Pose& x) { return x.inverse(); }

/// xi^ = [[omega^x, v], [0, 0]] in se(3).
inline Mat4 wedge(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.omega);
  m.topRightCorner<3, 1>() = xi.vel;
  return m;
}

/// Inverse of wedge. Throws MalformedTangent unless the matrix has the
/// se(3) sparsity pattern (skew top-left block, zero last row) within
/// `tolerance`. The rotational part is read symmetrized so that
/// wedge(vee(M)) == M for any valid M.
inline Twist vee(const Mat4& m, double tolerance = tol::tangent_pattern) {
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  const double tau = tolerance * scale;
  for (int c = 0; c < 4; ++c) {
    if (std::abs(m(3, c)) > tau) {
      throw MalformedTangent("vee: last row is not zero");
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (std::abs(m(i, i)) > tau) {
      throw MalformedTangent("vee: top-left block has a nonzero diagonal");
    }
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(m(i, j) + m(j, i)) > tau) {
        throw MalformedTangent("vee: top-left block is not skew-symmetric");
      }
    }
  }
  const Vec3 omega = 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  return Twist(omega, m.topRightCorner<3, 1>());
}

/// psi_bar(M) = [psi(A); b/2] for M = [[A, b], [c^T, d]]; satisfies
/// tr(M^T x^) = 2 x^T psi_bar(M).
inline Vec6 psi_bar(const Mat4& m) {
  Vec6 out;
  out.head<3>() = psi(m.topLeftCorner<3, 3>());
  out.tail<3>() = 0.5 * m.topRightCorner<3, 1>();
  return out;
}

/// Ad_X = [[R, 0], [p^x R, R]].
inline Mat6 adjoint(const Pose& x) {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = x.R;
  m.bottomLeftCorner<3, 3>() = skew(x.p) * x.R;
  m.bottomRightCorner<3, 3>() = x.R;
  return m;
}

/// ad_xi = [[omega^x, 0], [v^x, omega^x]].
inline Mat6 ad_small(const Twist& xi) {
  Mat6 m = Mat6::Zero();
  const Mat3 wx = skew(xi.omega);
  m.topLeftCorner<3, 3>() = wx;
  m.bottomLeftCorner<3, 3>() = skew(xi.vel);
  m.bottomRightCorner<3, 3>() = wx;
  return m;
}

/// Angle-axis rotation R_a(theta, u) = I + sin(theta) u^x + (1-cos(theta)) (u^x)^2.
inline Mat3 rot_angle_axis(double theta, const Vec3& u, double axis_tolerance = tol::unit_axis) {
  if (std::abs(u.norm() - 1.0) > axis_tolerance) {
    throw InvalidAxis("rot_angle_axis: axis is not a unit vector");
  }
  const Mat3 ux = skew(u);
  return Mat3::Identity() + std::sin(theta) * ux + (1.0 - std::cos(theta)) * (ux * ux);
}

namespace detail {

/// Coefficients ((1-cos t)/t, (t-sin t)/t) of the screw translation map,
/// with two-term Taylor expansions below tol::small_angle (removable
/// singularity at t = 0; both limits are 0).
inline void screw_coeffs(double theta, double& c1, double& c2) {
  if (std::abs(theta) < tol::small_angle) {
    const double t2 = theta * theta;
    c1 = theta * (0.5 - t2 / 24.0);
    c2 = t2 * (1.0 / 6.0 - t2 / 120.0);
  } else {
    c1 = (1.0 - std::cos(theta)) / theta;
    c2 = (theta - std::sin(theta)) / theta;
  }
}

}  // namespace detail

/// Closed-form exp(theta * u_c^) for a screw u_c = (u_c1, u_c2) with unit
/// rotational part: rotation R_a(theta, u_c1), translation
/// (I + c1 u_c1^x + c2 (u_c1^x)^2) * theta * u_c2.
inline Pose screw_exp(double theta, const Vec6& u_c, double axis_tolerance = tol::unit_axis) {
  const Vec3 u1 = u_c.head<3>();
  const Vec3 u2 = u_c.tail<3>();
  if (std::abs(u1.norm() - 1.0) > axis_tolerance) {
    throw InvalidAxis("screw_exp: rotational part is not a unit vector");
  }
  const Mat3 ux = skew(u1);
  double c1 = 0.0, c2 = 0.0;
  detail::screw_coeffs(theta, c1, c2);
  const Mat3 umap = Mat3::Identity() + c1 * ux + c2 * (ux * ux);
  return Pose(rot_angle_axis(theta, u1, axis_tolerance), umap * (theta * u2));
}

/// Nearest rotation to M in the Frobenius sense (polar projection via SVD,
/// determinant corrected to +1).
inline Mat3 project_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

/// Projects the rotation block back onto SO(3); the translation is kept.
/// Applied by the integrator after each full step, never on construction.
inline Pose renormalize(const Pose& x) {
  return Pose(project_rotation(x.R), x.p);
}

}  // namespace posesync
