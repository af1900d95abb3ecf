#include <unsupported/Eigen/KroneckerProduct>

#include <catch2/catch_amalgamated.hpp>

#include "posesync/graph.hpp"
#include "posesync/oracles.hpp"
#include "posesync/sampling.hpp"

using namespace posesync;

namespace {
const std::vector<std::pair<int, int>> kBenchEdges = {{0, 1}, {1, 2}, {2, 3}, {1, 4}, {4, 5}};
}

TEST_CASE("build_topology") {
  const Topology t = build_topology(6, kBenchEdges);
  CHECK(t.n_edges() == 5);
  CHECK(t.neighbors[0] == std::vector<int>{1});
  CHECK(t.neighbors[1] == std::vector<int>{0, 2, 4});
  CHECK(t.neighbors[2] == std::vector<int>{1, 3});
  CHECK(t.neighbors[3] == std::vector<int>{2});
  CHECK(t.neighbors[4] == std::vector<int>{1, 5});
  CHECK(t.neighbors[5] == std::vector<int>{4});
  CHECK(t.edges_positive[1] == std::vector<int>{1, 3});
  CHECK(t.edges_negative[1] == std::vector<int>{0});

  CHECK_THROWS_AS(build_topology(3, {{0, 1}, {1, 2}, {2, 0}}), AssumptionViolated);
  CHECK(build_topology(2, {{0, 1}}).n_edges() == 1);
  CHECK_THROWS_AS(build_topology(2, {{0, 0}}), MalformedGraph);
  CHECK_THROWS_AS(build_topology(3, {{0, 1}, {1, 0}}), MalformedGraph);
  CHECK_THROWS_AS(build_topology(3, {{0, 1}, {1, 5}}), MalformedGraph);
  CHECK_THROWS_AS(build_topology(4, {{0, 1}}), AssumptionViolated);
  // M = N-1 but one component carries a cycle
  CHECK_THROWS_AS(build_topology(5, {{0, 1}, {2, 3}, {3, 4}, {4, 2}}), AssumptionViolated);
  CHECK_THROWS_AS(build_topology(1, {}), AssumptionViolated);
}

TEST_CASE("incidence_B") {
  const Topology two = build_topology(2, {{0, 1}});
  const Eigen::MatrixXd b2 = incidence_B(two);
  CHECK(b2(0, 0) == 1.0);
  CHECK(b2(1, 0) == -1.0);

  const Topology t = build_topology(6, kBenchEdges);
  const Eigen::MatrixXd b = incidence_B(t);
  CHECK(b.colwise().sum().cwiseAbs().maxCoeff() == 0.0);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-9 * sv(0)) {
      ++rank;
    }
  }
  CHECK(rank == 5);
}

TEST_CASE("incidence_Bbar") {
  const Topology t = build_topology(6, kBenchEdges);

  // identity poses collapse the blocks to B (x) I6
  const std::vector<Pose> ident(t.n_edges(), Pose::Identity());
  const Eigen::MatrixXd bbar = incidence_Bbar(t, ident);
  const Eigen::MatrixXd kron =
      Eigen::kroneckerProduct(incidence_B(t), Eigen::MatrixXd::Identity(6, 6));
  CHECK((bbar - kron).norm() == 0.0);

  // full column rank for random trees and poses
  const auto rep = oracle::rank_probe(2, 8, 10);
  CHECK(rep.pass);
  CHECK(rep.worst_ratio > 1e-9);

  // stacked relation: edge twists equal Bbar^T xi
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Pose> rel;
    std::vector<Twist> xi;
    for (int k = 0; k < t.n_edges(); ++k) {
      rel.push_back(sample_pose(rng, 3.0));
    }
    Eigen::VectorXd stacked(6 * t.n_agents);
    for (int i = 0; i < t.n_agents; ++i) {
      xi.push_back(sample_twist_gaussian(rng, 1.0));
      stacked.segment<6>(6 * i) = xi.back().vec();
    }
    const Eigen::VectorXd edge_stack = incidence_Bbar(t, rel).transpose() * stacked;
    for (int k = 0; k < t.n_edges(); ++k) {
      const auto [i, j] = t.edges[k];
      const Twist direct = relative_twist(xi[i], xi[j], rel[k]);
      CHECK((edge_stack.segment<6>(6 * k) - direct.vec()).norm() < 1e-12);
    }
  }
}

TEST_CASE("relative pose and twist") {
  Rng rng(42);
  const Pose x = sample_pose(rng, 3.0);
  CHECK((relative_pose(x, x).matrix() - Mat4::Identity()).norm() < 1e-12);
  const Twist xi = sample_twist_gaussian(rng, 1.0);
  CHECK(relative_twist(xi, xi, Pose::Identity()).vec().norm() < 1e-15);
  CHECK((relative_pose(x, Pose::Identity()).matrix() - x.matrix()).norm() == 0.0);
}

TEST_CASE("error dynamics consistency") {
  // constant body twists: agents move exactly along exp(t xi^); the edge
  // relative pose obeys Xbardot = Xbar xibar^ with xibar recomputed from
  // the current Xbar. A single-step RK4 integration of the edge equation
  // must track the exact relative pose to integrator accuracy.
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose xi0 = sample_pose(rng, 1.0);
    const Pose xj0 = sample_pose(rng, 1.0);
    const Twist vi = sample_twist_gaussian(rng, 0.8);
    const Twist vj = sample_twist_gaussian(rng, 0.8);
    const double h = 0.01;

    const Mat4 xi_h = xi0.matrix() * oracle::series_exp<Mat4>(Mat4(h * wedge(vi)));
    const Mat4 xj_h = xj0.matrix() * oracle::series_exp<Mat4>(Mat4(h * wedge(vj)));
    const Pose exact = relative_pose(Pose::from_matrix(xi_h), Pose::from_matrix(xj_h));

    auto rhs = [&](const Mat4& xbar_m) {
      const Pose xbar = Pose::from_matrix(xbar_m);
      return Mat4(xbar_m * wedge(relative_twist(vi, vj, xbar)));
    };
    const Mat4 y0 = relative_pose(xi0, xj0).matrix();
    const Mat4 k1 = rhs(y0);
    const Mat4 k2 = rhs(y0 + 0.5 * h * k1);
    const Mat4 k3 = rhs(y0 + 0.5 * h * k2);
    const Mat4 k4 = rhs(y0 + h * k3);
    const Mat4 y1 = y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    CHECK((y1 - exact.matrix()).norm() < h * h);   // the stated bound
    CHECK((y1 - exact.matrix()).norm() < 1e-8);    // what RK4 actually achieves
  }
}

TEST_CASE("laplacian identity") {
  Rng rng(44);
  for (int n : {2, 4, 6, 8}) {
    const Topology t = sample_tree(rng, n);
    const Eigen::MatrixXd b = incidence_B(t);
    const Eigen::MatrixXd script_b =
        Eigen::kroneckerProduct(b.transpose(), Eigen::MatrixXd::Identity(6, 6));
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Twist> xi;
      Eigen::VectorXd stacked(6 * n);
      for (int i = 0; i < n; ++i) {
        xi.push_back(sample_twist_gaussian(rng, 1.5));
        stacked.segment<6>(6 * i) = xi.back().vec();
      }
      double lhs = 0.0;
      for (int i = 0; i < n; ++i) {
        Vec6 acc = Vec6::Zero();
        for (int j : t.neighbors[i]) {
          acc += xi[i].vec() - xi[j].vec();
        }
        lhs += xi[i].vec().dot(acc);
      }
      const double rhs = (script_b * stacked).squaredNorm();
      CHECK(std::abs(lhs - rhs) < 1e-9 * (1.0 + rhs));
    }
  }
}
