#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "posesync/graph.hpp"

namespace posesync {

using Rng = std::mt19937_64;

/// Uniform direction on the unit sphere (Gaussian normalization).
inline Vec3 sample_unit_vector(Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

/// Rotation angle with the Haar (uniform on SO(3)) density
/// p(theta) = (1 - cos theta)/pi on [0, pi]; sampled by inverting the CDF
/// F(theta) = (theta - sin theta)/pi with Newton iterations safeguarded
/// by bisection.
inline double sample_haar_angle(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double target = unif(rng) * std::numbers::pi;
  double lo = 0.0, hi = std::numbers::pi;
  double theta = 0.5 * std::numbers::pi;
  for (int it = 0; it < 80; ++it) {
    const double f = theta - std::sin(theta) - target;
    if (f > 0.0) {
      hi = theta;
    } else {
      lo = theta;
    }
    const double fp = 1.0 - std::cos(theta);
    double next = (fp > 1e-12) ? theta - f / fp : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - theta) < 1e-14) {
      theta = next;
      break;
    }
    theta = next;
  }
  return theta;
}

/// Haar-uniform rotation: uniform axis, angle from sample_haar_angle.
inline Mat3 sample_rotation_haar(Rng& rng) {
  const Vec3 axis = sample_unit_vector(rng);
  return rot_angle_axis(sample_haar_angle(rng), axis);
}

/// Haar rotation plus translation uniform in [-box, box]^3.
inline Pose sample_pose(Rng& rng, double box) {
  std::uniform_real_distribution<double> unif(-box, box);
  const Mat3 r = sample_rotation_haar(rng);
  return Pose(r, Vec3(unif(rng), unif(rng), unif(rng)));
}

inline Twist sample_twist_gaussian(Rng& rng, double sigma) {
  std::normal_distribution<double> gauss(0.0, sigma);
  Vec6 x;
  for (int c = 0; c < 6; ++c) {
    x(c) = gauss(rng);
  }
  return Twist(x);
}

/// Random labeled tree on n vertices with random edge orientation: each
/// vertex v >= 1 attaches to a uniformly chosen earlier vertex.
inline Topology sample_tree(Rng& rng, int n) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    std::uniform_int_distribution<int> flip(0, 1);
    const int u = pick(rng);
    if (flip(rng)) {
      edges.emplace_back(v, u);
    } else {
      edges.emplace_back(u, v);
    }
  }
  return build_topology(n, edges);
}

}  // namespace posesync
