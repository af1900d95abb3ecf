#pragma once

#include <vector>

#include "posesync/graph.hpp"
#include "posesync/potential.hpp"

namespace posesync {

/// Block-diagonal mass-inertia blkdiag(J, m I3) with J symmetric positive
/// definite. The inverse is applied blockwise.
class Inertia {
 public:
  Inertia() : Inertia(Mat3::Identity(), 1.0) {}

  Inertia(const Mat3& j, double m) : J_(0.5 * (j + j.transpose())), mass_(m) {
    if ((j - j.transpose()).norm() > 1e-9 * (1.0 + j.norm())) {
      throw InvalidInertia("Inertia: J must be symmetric");
    }
    if (!(m > 0.0)) {
      throw InvalidInertia("Inertia: mass must be strictly positive");
    }
    if (symmetric_eigen3(J_).values(0) <= 0.0) {
      throw InvalidInertia("Inertia: J must be positive definite");
    }
    Jinv_ = J_.inverse();
  }

  const Mat3& J() const { return J_; }
  double mass() const { return mass_; }

  Mat6 matrix() const {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = J_;
    m.bottomRightCorner<3, 3>() = mass_ * Mat3::Identity();
    return m;
  }

  Vec6 apply(const Vec6& xi) const {
    Vec6 out;
    out.head<3>() = J_ * xi.head<3>();
    out.tail<3>() = mass_ * xi.tail<3>();
    return out;
  }

  Vec6 solve(const Vec6& wrench) const {
    Vec6 out;
    out.head<3>() = Jinv_ * wrench.head<3>();
    out.tail<3>() = wrench.tail<3>() / mass_;
    return out;
  }

 private:
  Mat3 J_;
  double mass_;
  Mat3 Jinv_;
};

/// World pose, body twist and inertia of one rigid body.
struct AgentState {
  Pose X;
  Twist xi;
  Inertia inertia;
};

/// Strictly positive feedback gains.
struct Gains {
  double k_X = 1.0;
  double k_xi = 1.0;
  double k_e = 1.0;
  double k_theta = 1.0;
};

inline void validate_gains(const Gains& g) {
  if (!(g.k_X > 0.0 && g.k_xi > 0.0 && g.k_e > 0.0 && g.k_theta > 0.0)) {
    throw Error("gains must all be strictly positive");
  }
}

/// Full hybrid state: per-edge (Xbar_k, theta_k), per-agent (X_i, xi_i),
/// and hybrid time (t, j).
struct SwarmState {
  std::vector<EdgeState> edges;
  std::vector<AgentState> agents;
  double t = 0.0;
  long j = 0;
};

/// Wrench u_i = -k_X sum_{k in M_i} Bbar_{ik} psi_bar_grad(Xbar_k, theta_k)
///              - k_xi xi_i - k_e sum_{j in N_i} (xi_i - xi_j).
/// The edge sum accumulates the two nonzero block types directly (I6 on
/// positive ends, -Ad^{-T} on negative ends); Bbar is never formed.
inline Twist control_input(int i, const SwarmState& s, const Topology& topo,
                           const WeightMatrix& w, const SynergyParams& p, const Gains& g) {
  Vec6 grad_sum = Vec6::Zero();
  for (int k : topo.edges_positive[i]) {
    grad_sum += grad_pose(s.edges[k].rel_pose, s.edges[k].theta, w, p);
  }
  for (int k : topo.edges_negative[i]) {
    grad_sum -= adjoint(s.edges[k].rel_pose.inverse()).transpose() *
                grad_pose(s.edges[k].rel_pose, s.edges[k].theta, w, p);
  }
  Vec6 rel_vel = Vec6::Zero();
  for (int j : topo.neighbors[i]) {
    rel_vel += s.agents[i].xi.vec() - s.agents[j].xi.vec();
  }
  return Twist(Vec6(-g.k_X * grad_sum - g.k_xi * s.agents[i].xi.vec() - g.k_e * rel_vel));
}

/// xidot = I^{-1} (ad_xi^T I xi + u).
inline Vec6 body_accel(const AgentState& a, const Twist& u) {
  const Vec6 momentum = a.inertia.apply(a.xi.vec());
  return a.inertia.solve(Vec6(ad_small(a.xi).transpose() * momentum + u.vec()));
}

/// Time derivative of the closed-loop flow, in the same layout as
/// SwarmState. Pose derivatives are the raw 4x4 products X xi^.
struct SwarmDeriv {
  std::vector<Mat4> edge_pose_dot;
  std::vector<double> theta_dot;
  std::vector<Mat4> agent_pose_dot;
  std::vector<Vec6> xi_dot;
};

/// Closed-loop flow map: Xbardot_k = Xbar_k xibar_k^,
/// thetadot_k = -k_theta dU/dtheta, Xdot_i = X_i xi_i^,
/// xidot_i from the dynamics under control_input.
inline SwarmDeriv flow_field(const SwarmState& s, const Topology& topo, const WeightMatrix& w,
                             const SynergyParams& p, const Gains& g) {
  SwarmDeriv d;
  d.edge_pose_dot.resize(s.edges.size());
  d.theta_dot.resize(s.edges.size());
  d.agent_pose_dot.resize(s.agents.size());
  d.xi_dot.resize(s.agents.size());
  for (int k = 0; k < topo.n_edges(); ++k) {
    const auto [i, j] = topo.edges[k];
    const Twist xibar = relative_twist(s.agents[i].xi, s.agents[j].xi, s.edges[k].rel_pose);
    d.edge_pose_dot[k] = s.edges[k].rel_pose.matrix() * wedge(xibar);
    d.theta_dot[k] = -g.k_theta * grad_theta(s.edges[k].rel_pose, s.edges[k].theta, w, p);
  }
  for (int i = 0; i < topo.n_agents; ++i) {
    d.agent_pose_dot[i] = s.agents[i].X.matrix() * wedge(s.agents[i].xi);
    d.xi_dot[i] = body_accel(s.agents[i], control_input(i, s, topo, w, p, g));
  }
  return d;
}

/// Lyapunov bookkeeping: Ubar = sum_k U(Xbar_k, theta_k),
/// kinetic = sum_i xi_i^T I_i xi_i, Vbar = k_X Ubar + kinetic.
struct Energy {
  double Vbar = 0.0;
  double Ubar = 0.0;
  double kinetic = 0.0;
};

inline Energy lyapunov(const SwarmState& s, const WeightMatrix& w, const SynergyParams& p,
                       const Gains& g) {
  Energy e;
  for (const EdgeState& edge : s.edges) {
    e.Ubar += potential_U(edge.rel_pose, edge.theta, w, p);
  }
  for (const AgentState& a : s.agents) {
    e.kinetic += a.xi.vec().dot(a.inertia.apply(a.xi.vec()));
  }
  e.Vbar = g.k_X * e.Ubar + e.kinetic;
  return e;
}

}  // namespace posesync
