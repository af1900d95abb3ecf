#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "posesync/lie.hpp"

namespace posesync {

namespace tol {
inline constexpr double psd = 1e-9;          // W >= -psd, min-eig(Wbar) > psd
inline constexpr double eigen_gap = 1e-9;    // lambda_1 = lambda_2 when gap <= eigen_gap*(1+lambda_3)
inline constexpr double synergy_gap = 1e-9;  // Delta_W* must exceed this
inline constexpr double value_tie = 1e-12;   // relative tie window in jump_g
}  // namespace tol

/// Eigen-decomposition of a symmetric 3x3 matrix: values ascending,
/// eigenvectors as the matching columns, each column sign-fixed.
struct EigenPairs {
  Vec3 values = Vec3::Zero();
  Mat3 vectors = Mat3::Identity();
};

/// Deterministic cyclic Jacobi iteration for a symmetric 3x3 matrix.
/// Sweeps the (0,1), (0,2), (1,2) pivots until the off-diagonal norm is
/// negligible, sorts the eigenvalues ascending and fixes each eigenvector
/// sign so its largest-magnitude component is positive.
inline EigenPairs symmetric_eigen3(const Mat3& s_in) {
  Mat3 a = 0.5 * (s_in + s_in.transpose());
  Mat3 v = Mat3::Identity();
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        off += a(p, q) * a(p, q);
      }
    }
    if (std::sqrt(off) <= 1e-15 * scale) {
      break;
    }
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) {
          continue;
        }
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        Mat3 g = Mat3::Identity();
        g(p, p) = c;
        g(q, q) = c;
        g(p, q) = sn;
        g(q, p) = -sn;
        a = g.transpose() * a * g;
        v = v * g;
      }
    }
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  EigenPairs out;
  for (int i = 0; i < 3; ++i) {
    out.values(i) = a(order[i], order[i]);
    Vec3 col = v.col(order[i]);
    int imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col(imax) < 0.0) {
      col = -col;
    }
    out.vectors.col(i) = col.normalized();
  }
  return out;
}

/// The weighting matrix [[A, b], [b^T, d]] together with its derived
/// quantities W = A - b b^T / d, Wbar = (tr(W) I - W)/2 and the sorted
/// eigenstructure of W.
struct WeightMatrix {
  Mat3 A = Mat3::Identity();
  Vec3 b = Vec3::Zero();
  double d = 1.0;
  Mat3 W = Mat3::Identity();
  Mat3 Wbar = Mat3::Identity();
  Vec3 eigenvalues = Vec3::Ones();    // of W, ascending
  Mat3 eigenvectors = Mat3::Identity();

  Mat4 assembled() const {
    Mat4 m;
    m.topLeftCorner<3, 3>() = A;
    m.topRightCorner<3, 1>() = b;
    m.bottomLeftCorner<1, 3>() = b.transpose();
    m(3, 3) = d;
    return m;
  }
};

/// Validates (A, b, d) and computes the derived structure. A is
/// symmetrized on input. Throws InvalidScale when d <= 0, NotPSD when W
/// has an eigenvalue below -tol::psd, DegenerateWeight when Wbar is not
/// positive definite.
inline WeightMatrix validate_weight(const Mat3& a_in, const Vec3& b, double d) {
  if (!(d > 0.0)) {
    throw InvalidScale("validate_weight: d must be strictly positive");
  }
  WeightMatrix w;
  w.A = 0.5 * (a_in + a_in.transpose());
  w.b = b;
  w.d = d;
  w.W = w.A - (b * b.transpose()) / d;
  w.W = 0.5 * (w.W + w.W.transpose());
  w.Wbar = 0.5 * (w.W.trace() * Mat3::Identity() - w.W);
  const EigenPairs ew = symmetric_eigen3(w.W);
  if (ew.values(0) < -tol::psd) {
    throw NotPSD("validate_weight: W = A - b b^T/d is not positive semi-definite");
  }
  const EigenPairs ewbar = symmetric_eigen3(w.Wbar);
  if (!(ewbar.values(0) > tol::psd)) {
    throw DegenerateWeight("validate_weight: Wbar is not positive definite");
  }
  w.eigenvalues = ew.values;
  w.eigenvectors = ew.vectors;
  return w;
}

/// Switching-parameter set {Theta, u_c1, u_c2, gamma, delta} plus the
/// synergy level Delta_W* and theta_max = sup |theta'| over Theta.
struct SynergyParams {
  std::vector<double> theta_set;  // nonzero angles, |theta'| in (0, pi]
  Vec3 u_c1 = Vec3::UnitX();
  Vec3 u_c2 = Vec3::Zero();
  double gamma = 0.1;
  double delta = 0.01;        // delta_Xbar, the hysteresis gap
  double delta_star = 0.0;    // Delta_W* = min_v Delta(v, u_c1)
  double theta_max = 0.0;
  int synthesis_case = 0;         // 1, 2 or 3; 0 when u_c1 was overridden

  Vec6 u_c() const {
    Vec6 u;
    u << u_c1, u_c2;
    return u;
  }
};

/// Delta(v, u_c1) = u_c1^T (tr(W) I - W - 2 v^T W v (I - v v^T)) u_c1.
inline double delta_of(const Vec3& v, const Vec3& u_c1, const WeightMatrix& w) {
  const Mat3 m = w.W.trace() * Mat3::Identity() - w.W -
                 2.0 * (v.dot(w.W * v)) * (Mat3::Identity() - v * v.transpose());
  return u_c1.dot(m * u_c1);
}

/// min of Delta(v, u_c1) over the three computed eigenvectors of W.
inline double min_delta_over_basis(const Vec3& u_c1, const WeightMatrix& w) {
  double dmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    dmin = std::min(dmin, delta_of(w.eigenvectors.col(i), u_c1, w));
  }
  return dmin;
}

/// Constructs the parameter set from the eigenstructure of W.
///
/// Case routing on the ascending eigenvalues (l1, l2, l3):
///   1) l1 = l2 (within tolerance):      u_c1 leans out of the degenerate
///      plane, Delta_W* = l1 (1 - l2/l3);
///   2) l2 >= l1 l3 / (l3 - l1):         u_c1 in span(v2, v3), Delta_W* = l1;
///   3) otherwise:                        all three weights positive,
///      Delta_W* = 4 l1 l2 l3 / (2 (l1 l2 + l1 l3 + l2 l3)).
///
/// gamma and delta are placed strictly inside their bounds using the
/// margins: gamma = c_gamma * 4 Delta_W*/pi^2 and
/// delta = c_delta * (4 Delta_W*/pi^2 - gamma) * theta_max^2 / 2.
inline SynergyParams synth_params(const WeightMatrix& w,
                                  std::vector<double> theta_set = {0.3 * std::numbers::pi},
                                  double c_gamma = 0.9, double c_delta = 0.75) {
  constexpr double pi = std::numbers::pi;
  if (theta_set.empty()) {
    theta_set = {0.3 * pi};
  }
  for (double th : theta_set) {
    if (!(std::abs(th) > 0.0) || std::abs(th) > pi + 1e-12) {
      throw Error("synth_params: every angle in Theta must satisfy 0 < |theta'| <= pi");
    }
  }
  if (!(c_gamma > 0.0 && c_gamma < 1.0 && c_delta > 0.0 && c_delta < 1.0)) {
    throw Error("synth_params: margins must lie in (0, 1)");
  }

  const double l1 = w.eigenvalues(0);
  const double l2 = w.eigenvalues(1);
  const double l3 = w.eigenvalues(2);

  double a1 = 0.0, a2 = 0.0, a3 = 0.0, delta_star = 0.0;
  int which = 0;
  if (l2 - l1 <= tol::eigen_gap * (1.0 + std::abs(l3))) {
    which = 1;
    a3 = std::sqrt(std::max(0.0, 1.0 - l2 / l3));
    a1 = a2 = std::sqrt(std::max(0.0, l2 / (2.0 * l3)));
    delta_star = l1 * (1.0 - l2 / l3);
  } else if (l2 >= l1 * l3 / (l3 - l1)) {
    which = 2;
    a1 = 0.0;
    a2 = std::sqrt(l2 / (l2 + l3));
    a3 = std::sqrt(l3 / (l2 + l3));
    delta_star = l1;
  } else {
    which = 3;
    const double s = 2.0 * (l1 * l2 + l1 * l3 + l2 * l3);
    a1 = std::sqrt(std::max(0.0, 1.0 - 4.0 * l2 * l3 / s));
    a2 = std::sqrt(std::max(0.0, 1.0 - 4.0 * l1 * l3 / s));
    a3 = std::sqrt(std::max(0.0, 1.0 - 4.0 * l1 * l2 / s));
    delta_star = 4.0 * l1 * l2 * l3 / s;
  }
  if (delta_star <= tol::synergy_gap) {
    throw NoSynergyGap("synth_params: Delta_W* vanishes (isotropic W)");
  }

  SynergyParams p;
  p.theta_set = std::move(theta_set);
  p.u_c1 = (a1 * w.eigenvectors.col(0) + a2 * w.eigenvectors.col(1) +
            a3 * w.eigenvectors.col(2)).normalized();
  p.u_c2 = -skew(p.u_c1) * w.b / w.d;
  p.delta_star = delta_star;
  p.synthesis_case = which;
  p.theta_max = 0.0;
  for (double th : p.theta_set) {
    p.theta_max = std::max(p.theta_max, std::abs(th));
  }
  const double gamma_bound = 4.0 * delta_star / (pi * pi);
  p.gamma = c_gamma * gamma_bound;
  p.delta = c_delta * (gamma_bound - p.gamma) * p.theta_max * p.theta_max / 2.0;

  // Construction self-check: the Delta level attained on the basis cannot
  // fall below the case formula.
  if (min_delta_over_basis(p.u_c1, w) < delta_star - 1e-9) {
    throw Error("synth_params: Delta(v, u_c1) fell below Delta_W* on an eigenvector");
  }
  return p;
}

/// Strict switching-gap inequalities, reported (not enforced) so that
/// user-supplied overrides such as the benchmark gamma/delta pairs can be
/// run while still flagging the violated bounds.
inline std::vector<std::string> check_synergy(const SynergyParams& p, const WeightMatrix& w) {
  constexpr double pi = std::numbers::pi;
  std::vector<std::string> warnings;
  if (p.theta_set.empty()) {
    warnings.push_back("Theta is empty");
  }
  for (double th : p.theta_set) {
    if (!(std::abs(th) > 0.0) || std::abs(th) > pi + 1e-12) {
      warnings.push_back("Theta contains an angle outside 0 < |theta'| <= pi");
      break;
    }
  }
  if (std::abs(p.u_c1.norm() - 1.0) > tol::unit_axis) {
    warnings.push_back("u_c1 is not a unit vector");
  }
  if ((p.u_c2 + skew(p.u_c1) * w.b / w.d).norm() > 1e-9) {
    warnings.push_back("u_c2 != -u_c1^x b / d");
  }
  const double gamma_bound = 4.0 * p.delta_star / (pi * pi);
  if (!(p.gamma > 0.0) || p.gamma >= gamma_bound) {
    warnings.push_back("gamma >= 4 Delta_W*/pi^2 (= " + std::to_string(gamma_bound) + ")");
  }
  const double delta_bound = (gamma_bound - p.gamma) * p.theta_max * p.theta_max / 2.0;
  if (!(p.delta > 0.0) || p.delta >= delta_bound) {
    warnings.push_back("delta >= (4 Delta_W*/pi^2 - gamma) theta_max^2/2 (= " +
                       std::to_string(delta_bound) + ")");
  }
  return warnings;
}

/// T_{u_c}(theta) = exp(theta u_c^).
inline Pose screw_pose(double theta, const SynergyParams& p) {
  return screw_exp(theta, p.u_c());
}

/// Gamma_A(Xbar, theta) = Xbar * T_{u_c}(theta).
inline Pose gamma_transform(const Pose& xbar, double theta, const SynergyParams& p) {
  return xbar * screw_pose(theta, p);
}

/// V(Xbar) = 1/2 tr((I4 - Xbar) A (I4 - Xbar)^T).
inline double potential_V(const Pose& xbar, const WeightMatrix& w) {
  const Mat4 e = Mat4::Identity() - xbar.matrix();
  return 0.5 * (e * w.assembled() * e.transpose()).trace();
}

/// U(Xbar, theta) = 1/2 tr((I4 - Gamma) A (I4 - Gamma)^T) + gamma/2 theta^2.
inline double potential_U(const Pose& xbar, double theta, const WeightMatrix& w,
                          const SynergyParams& p) {
  const Mat4 e = Mat4::Identity() - gamma_transform(xbar, theta, p).matrix();
  return 0.5 * (e * w.assembled() * e.transpose()).trace() + 0.5 * p.gamma * theta * theta;
}

namespace detail {

/// psi_bar((I4 - Gamma^{-1}) A), the shared factor of both gradients.
inline Vec6 psi_bar_gamma(const Pose& xbar, double theta, const WeightMatrix& w,
                          const SynergyParams& p) {
  const Mat4 m = (Mat4::Identity() - gamma_transform(xbar, theta, p).inverse().matrix()) *
                 w.assembled();
  return psi_bar(m);
}

}  // namespace detail

/// psi_bar_grad(Xbar, theta) = Ad_{T(theta)}^{-T} psi_bar((I4 - Gamma^{-1}) A);
/// satisfies d/de U(Xbar exp(e^), theta)|_0 = 2 e^T psi_bar_grad.
inline Vec6 grad_pose(const Pose& xbar, double theta, const WeightMatrix& w,
                      const SynergyParams& p) {
  const Mat6 ad_inv_t = adjoint(screw_pose(theta, p).inverse()).transpose();
  return ad_inv_t * detail::psi_bar_gamma(xbar, theta, w, p);
}

/// d U / d theta = gamma theta + 2 u_c^T psi_bar((I4 - Gamma^{-1}) A).
inline double grad_theta(const Pose& xbar, double theta, const WeightMatrix& w,
                         const SynergyParams& p) {
  return p.gamma * theta + 2.0 * p.u_c().dot(detail::psi_bar_gamma(xbar, theta, w, p));
}

/// mu_U(Xbar, theta) = U(Xbar, theta) - min over Theta of U(Xbar, theta').
inline double mu_U(const Pose& xbar, double theta, const WeightMatrix& w,
                   const SynergyParams& p) {
  double best = std::numeric_limits<double>::infinity();
  for (double th : p.theta_set) {
    best = std::min(best, potential_U(xbar, th, w, p));
  }
  return potential_U(xbar, theta, w, p) - best;
}

/// Jump map g: a minimizer of U(Xbar, .) over Theta. Ties (within a
/// relative window, so that analytically symmetric values compare equal)
/// are broken by smallest |theta'|, then by positive sign.
inline double jump_g(const Pose& xbar, double /*theta*/, const WeightMatrix& w,
                     const SynergyParams& p) {
  double best_theta = p.theta_set.front();
  double best_value = potential_U(xbar, best_theta, w, p);
  for (std::size_t i = 1; i < p.theta_set.size(); ++i) {
    const double th = p.theta_set[i];
    const double u = potential_U(xbar, th, w, p);
    const double tie = tol::value_tie * (1.0 + std::abs(best_value));
    if (u < best_value - tie) {
      best_value = u;
      best_theta = th;
    } else if (u <= best_value + tie) {
      const bool smaller = std::abs(th) < std::abs(best_theta) - tol::value_tie;
      const bool same_mag = std::abs(std::abs(th) - std::abs(best_theta)) <= tol::value_tie;
      if (smaller || (same_mag && th > best_theta)) {
        best_value = std::min(best_value, u);
        best_theta = th;
      }
    }
  }
  return best_theta;
}

/// The critical set of V: the identity plus the pi-rotations about the
/// eigenvectors of W with the matched translation (I - R_a(pi, v)) b / d.
struct CriticalSet {
  std::vector<Pose> poses;  // poses[0] is the identity
  bool degenerate = false;  // repeated eigenvalues: E_v(W) is a continuum
};

inline CriticalSet enumerate_critical(const WeightMatrix& w,
                                      double gap_tolerance = tol::eigen_gap) {
  CriticalSet out;
  out.poses.push_back(Pose::Identity());
  const double scale = 1.0 + std::abs(w.eigenvalues(2));
  out.degenerate = (w.eigenvalues(1) - w.eigenvalues(0) <= gap_tolerance * scale) ||
                   (w.eigenvalues(2) - w.eigenvalues(1) <= gap_tolerance * scale);
  for (int i = 0; i < 3; ++i) {
    const Vec3 v = w.eigenvectors.col(i);
    const Mat3 r = rot_angle_axis(std::numbers::pi, v);
    out.poses.emplace_back(r, (Mat3::Identity() - r) * w.b / w.d);
  }
  return out;
}

}  // namespace posesync
