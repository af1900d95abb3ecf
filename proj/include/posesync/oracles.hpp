#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "posesync/control.hpp"
#include "posesync/sampling.hpp"

namespace posesync {

/// On-demand verification routines exposed by the `oracle` CLI command.
/// Every check here deliberately takes an independent computational route
/// from the closed-form implementation it probes (truncated series
/// against closed-form exponentials, finite differences against analytic
/// gradients, dense SVD against the block-accumulated controller).
namespace oracle {

/// Taylor-series exp(M) = sum M^k / k!, with argument scaling: M is halved
/// until its norm is below 1/2 and the 20-term partial sum is squared
/// back, so the truncation stays near machine precision for the argument
/// scales that arise here (a bare 20-term sum at |M| ~ pi * |u_c| leaves
/// ~1e-9 of tail, which would drown the quantity under test).
template <typename Matrix>
inline Matrix series_exp(const Matrix& m, int terms = 20) {
  int squarings = 0;
  double scale = m.norm();
  while (scale > 0.5 && squarings < 40) {
    scale *= 0.5;
    ++squarings;
  }
  const Matrix scaled = m / std::pow(2.0, squarings);
  Matrix acc = Matrix::Identity();
  Matrix power = Matrix::Identity();
  double factorial = 1.0;
  for (int k = 1; k <= terms; ++k) {
    power = Matrix(power * scaled);
    factorial *= k;
    acc += power / factorial;
  }
  for (int s = 0; s < squarings; ++s) {
    acc = Matrix(acc * acc);
  }
  return acc;
}

struct GradCheckReport {
  int samples = 0;
  double max_rel_pose = 0.0;   // psi_bar_grad vs central differences
  double max_rel_theta = 0.0;  // dU/dtheta vs central differences
  bool pass = false;
};

/// Central finite differences of U along the six coordinate twists and in
/// theta, against the closed forms, on random states.
inline GradCheckReport gradcheck(const WeightMatrix& w, const SynergyParams& p, int samples = 500,
                                 double eps = 1e-6, double rel_tol = 1e-5, uint64_t seed = 20260809) {
  Rng rng(seed);
  GradCheckReport rep;
  rep.samples = samples;
  std::uniform_real_distribution<double> angle(-0.9 * std::numbers::pi, 0.9 * std::numbers::pi);
  for (int s = 0; s < samples; ++s) {
    const Pose xbar = sample_pose(rng, 2.0);
    const double theta = angle(rng);
    const Vec6 grad = grad_pose(xbar, theta, w, p);
    for (int c = 0; c < 6; ++c) {
      Vec6 e = Vec6::Zero();
      e(c) = 1.0;
      const Mat4 step = series_exp<Mat4>(Mat4(eps * wedge(Twist(e))));
      const Mat4 back = series_exp<Mat4>(Mat4(-eps * wedge(Twist(e))));
      const double up = potential_U(Pose::from_matrix(xbar.matrix() * step), theta, w, p);
      const double dn = potential_U(Pose::from_matrix(xbar.matrix() * back), theta, w, p);
      const double fd = (up - dn) / (2.0 * eps);
      const double closed = 2.0 * grad(c);
      const double rel = std::abs(fd - closed) / (1.0 + std::abs(closed));
      rep.max_rel_pose = std::max(rep.max_rel_pose, rel);
    }
    const double up = potential_U(xbar, theta + eps, w, p);
    const double dn = potential_U(xbar, theta - eps, w, p);
    const double fd = (up - dn) / (2.0 * eps);
    const double closed = grad_theta(xbar, theta, w, p);
    rep.max_rel_theta =
        std::max(rep.max_rel_theta, std::abs(fd - closed) / (1.0 + std::abs(closed)));
  }
  rep.pass = rep.max_rel_pose < rel_tol && rep.max_rel_theta < rel_tol;
  return rep;
}

struct RankReport {
  int trees = 0;
  int assignments = 0;
  double worst_ratio = 1.0;  // min over cases of sigma_min / sigma_max
  bool pass = false;
};

/// Numerical rank of Bbar on random trees and random relative poses:
/// full column rank 6(N-1) demands sigma_min / sigma_max > threshold.
inline RankReport rank_probe(int n_min = 2, int n_max = 8, int assignments = 50,
                             double threshold = 1e-9, double box = 3.0,
                             uint64_t seed = 20260809) {
  Rng rng(seed);
  RankReport rep;
  rep.pass = true;
  for (int n = n_min; n <= n_max; ++n) {
    const Topology topo = sample_tree(rng, n);
    ++rep.trees;
    for (int a = 0; a < assignments; ++a) {
      std::vector<Pose> rel;
      rel.reserve(topo.n_edges());
      for (int k = 0; k < topo.n_edges(); ++k) {
        rel.push_back(sample_pose(rng, box));
      }
      const Eigen::MatrixXd bbar = incidence_Bbar(topo, rel);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(bbar);
      const auto& sv = svd.singularValues();
      const double ratio = sv(sv.size() - 1) / sv(0);
      rep.worst_ratio = std::min(rep.worst_ratio, ratio);
      if (!(ratio > threshold)) {
        rep.pass = false;
      }
      ++rep.assignments;
    }
  }
  return rep;
}

struct GapReport {
  double delta = 0.0;
  double min_mu = 0.0;           // over undesired critical points
  double max_chain_residual = 0.0;  // |U(crit, theta') - algebraic chain|
  bool degenerate = false;
  bool pass = false;
};

/// Synergy gap at every enumerated undesired critical point, plus the
/// algebraic chain U(Xbar, theta') = U(Xbar, 0) - 2 sin^2(theta'/2)
/// Delta(v, u_c1) + gamma/2 theta'^2 checked per (point, theta') pair.
inline GapReport gap_probe(const WeightMatrix& w, const SynergyParams& p,
                           double chain_tol = 1e-9) {
  GapReport rep;
  rep.delta = p.delta;
  rep.min_mu = std::numeric_limits<double>::infinity();
  const CriticalSet crit = enumerate_critical(w);
  rep.degenerate = crit.degenerate;
  for (std::size_t c = 1; c < crit.poses.size(); ++c) {
    const Pose& xbar = crit.poses[c];
    rep.min_mu = std::min(rep.min_mu, mu_U(xbar, 0.0, w, p));
    const Vec3 v = w.eigenvectors.col(static_cast<int>(c) - 1);
    const double u0 = potential_U(xbar, 0.0, w, p);
    for (double th : p.theta_set) {
      const double lhs = potential_U(xbar, th, w, p);
      const double rhs = u0 - 2.0 * std::pow(std::sin(0.5 * th), 2) * delta_of(v, p.u_c1, w) +
                         0.5 * p.gamma * th * th;
      rep.max_chain_residual = std::max(rep.max_chain_residual, std::abs(lhs - rhs));
    }
  }
  rep.pass = rep.min_mu > rep.delta && rep.max_chain_residual < chain_tol;
  return rep;
}

struct ExpReport {
  int samples = 0;
  double max_residual = 0.0;  // |screw_exp - series exp|_F
  bool pass = false;
};

/// Closed-form screw exponential against the truncated series of
/// theta * u_c^ over an angle sweep plus random screws.
inline ExpReport exp_probe(const SynergyParams& p, double abs_tol = 1e-9,
                           uint64_t seed = 20260809) {
  Rng rng(seed);
  ExpReport rep;
  auto check = [&](double theta, const Vec6& u_c) {
    const Mat4 closed = screw_exp(theta, u_c).matrix();
    const Mat4 series = series_exp<Mat4>(Mat4(theta * wedge(Twist(u_c))));
    rep.max_residual = std::max(rep.max_residual, (closed - series).norm());
    ++rep.samples;
  };
  for (int i = -40; i <= 40; ++i) {
    check(i * std::numbers::pi / 40.0, p.u_c());
  }
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> comp(-3.0, 3.0);
  for (int s = 0; s < 200; ++s) {
    Vec6 u;
    u.head<3>() = sample_unit_vector(rng);
    u.tail<3>() = Vec3(comp(rng), comp(rng), comp(rng));
    check(angle(rng), u);
  }
  rep.pass = rep.max_residual < abs_tol;
  return rep;
}

}  // namespace oracle
}  // namespace posesync
