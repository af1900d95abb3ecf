#pragma once

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "posesync/lie.hpp"

namespace posesync {

/// Undirected connected acyclic interaction graph with an arbitrary
/// orientation per edge: edge k = (i, j) has positive end i and negative
/// end j. Vertices are 0-indexed here; config files use 1-indexed ids.
struct Topology {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;         // (positive, negative)
  std::vector<std::vector<int>> neighbors;        // N_i, sorted
  std::vector<std::vector<int>> edges_positive;   // M_i^+
  std::vector<std::vector<int>> edges_negative;   // M_i^-

  int n_edges() const { return static_cast<int>(edges.size()); }
};

/// Per-edge hybrid state: the relative pose Xbar_k = X_j^{-1} X_i and the
/// switching variable theta_k.
struct EdgeState {
  Pose rel_pose;
  double theta = 0.0;
};

/// Validates the edge list and derives the neighbor / incidence sets.
/// Throws MalformedGraph on self-loops, duplicate undirected edges or
/// out-of-range indices, AssumptionViolated when the undirected graph is
/// not a tree (connected and acyclic) on at least two vertices.
inline Topology build_topology(int n_agents, const std::vector<std::pair<int, int>>& edges) {
  if (n_agents < 2) {
    throw AssumptionViolated("build_topology: need at least two agents");
  }
  Topology t;
  t.n_agents = n_agents;
  t.edges = edges;
  t.neighbors.resize(n_agents);
  t.edges_positive.resize(n_agents);
  t.edges_negative.resize(n_agents);

  std::set<std::pair<int, int>> seen;
  for (int k = 0; k < t.n_edges(); ++k) {
    const auto [i, j] = edges[k];
    if (i < 0 || i >= n_agents || j < 0 || j >= n_agents) {
      throw MalformedGraph("build_topology: vertex index out of range");
    }
    if (i == j) {
      throw MalformedGraph("build_topology: self-loop");
    }
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second) {
      throw MalformedGraph("build_topology: duplicate undirected edge");
    }
    t.neighbors[i].push_back(j);
    t.neighbors[j].push_back(i);
    t.edges_positive[i].push_back(k);
    t.edges_negative[j].push_back(k);
  }
  if (t.n_edges() != n_agents - 1) {
    throw AssumptionViolated("build_topology: graph is not a tree (M != N-1)");
  }
  // Connectivity by traversal; with M = N-1 this also rules out cycles.
  std::vector<char> visited(n_agents, 0);
  std::vector<int> stack = {0};
  visited[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : t.neighbors[u]) {
      if (!visited[v]) {
        visited[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  if (count != n_agents) {
    throw AssumptionViolated("build_topology: graph is not connected");
  }
  for (auto& nb : t.neighbors) {
    std::sort(nb.begin(), nb.end());
  }
  return t;
}

/// Classical incidence matrix: B(i,k) = +1 on the positive end, -1 on the
/// negative end, 0 otherwise.
inline Eigen::MatrixXd incidence_B(const Topology& t) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(t.n_agents, t.n_edges());
  for (int k = 0; k < t.n_edges(); ++k) {
    b(t.edges[k].first, k) = 1.0;
    b(t.edges[k].second, k) = -1.0;
  }
  return b;
}

/// Pose-dependent block incidence matrix: block (i,k) is I6 on the
/// positive end, -Ad_{Xbar_k}^{-T} on the negative end, 0 otherwise.
/// Materialized dense for rank diagnostics only; the control law
/// accumulates the blocks directly.
inline Eigen::MatrixXd incidence_Bbar(const Topology& t, const std::vector<Pose>& rel_poses) {
  if (static_cast<int>(rel_poses.size()) != t.n_edges()) {
    throw Error("incidence_Bbar: need one relative pose per edge");
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6 * t.n_agents, 6 * t.n_edges());
  for (int k = 0; k < t.n_edges(); ++k) {
    const auto [i, j] = t.edges[k];
    b.block<6, 6>(6 * i, 6 * k) = Mat6::Identity();
    b.block<6, 6>(6 * j, 6 * k) = -adjoint(rel_poses[k].inverse()).transpose();
  }
  return b;
}

/// Xbar_k = X_j^{-1} X_i for edge k with positive end i, negative end j.
inline Pose relative_pose(const Pose& xi, const Pose& xj) {
  return xj.inverse() * xi;
}

/// xibar_k = xi_i - Ad_{Xbar_k}^{-1} xi_j.
inline Twist relative_twist(const Twist& xi_i, const Twist& xi_j, const Pose& xbar_k) {
  return Twist(Vec6(xi_i.vec() - adjoint(xbar_k.inverse()) * xi_j.vec()));
}

}  // namespace posesync
