#pragma once

#include <vector>

#include <Eigen/Dense>

#include "denscov/controller.hpp"
#include "denscov/dynamics.hpp"
#include "denscov/rng.hpp"
#include "denscov/transport.hpp"

namespace denscov::testutil {

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) M(i, j) = rng.uniform(lo, hi);
  }
  return M;
}

inline Eigen::MatrixXd random_psd(Rng& rng, int n, double scale = 1.0) {
  const Eigen::MatrixXd M = random_matrix(rng, n, n);
  return scale * (M.transpose() * M);
}

inline Eigen::MatrixXd random_pd(Rng& rng, int n, double scale = 1.0) {
  return random_psd(rng, n, scale) + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

inline LtiModel random_lti(Rng& rng, int n, int m) {
  LtiModel model;
  model.A = random_matrix(rng, n, n);
  model.B = random_matrix(rng, n, m);
  model.C = random_matrix(rng, 2, n);
  return model;
}

struct SelectionFixture {
  LocalSelection selection;
  std::vector<Eigen::Vector2d> positions;
};

// A selection over `count` random points with positive masses summing to
// alpha; indices cover all the points so tests can feed stage_cost directly.
inline SelectionFixture random_selection(Rng& rng, int count, double alpha = 1.0) {
  SelectionFixture fx;
  Eigen::VectorXd raw(count);
  for (int j = 0; j < count; ++j) {
    fx.positions.emplace_back(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
    raw[j] = rng.uniform(0.1, 1.0);
  }
  raw *= alpha / raw.sum();
  Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
  for (int j = 0; j < count; ++j) {
    fx.selection.indices.push_back(j);
    weighted += raw[j] * fx.positions[j];
  }
  fx.selection.gammas = raw;
  fx.selection.gamma_sum = raw.sum();
  fx.selection.centroid = weighted / fx.selection.gamma_sum;
  return fx;
}

inline DiscreteDistribution random_distribution(Rng& rng, int count, double spread = 1.0) {
  DiscreteDistribution d;
  d.weights = Eigen::VectorXd(count);
  for (int i = 0; i < count; ++i) {
    d.positions.emplace_back(rng.uniform(-spread, spread), rng.uniform(-spread, spread));
    d.weights[i] = rng.uniform(0.2, 1.0);
  }
  d.weights /= d.weights.sum();
  return d;
}

}  // namespace denscov::testutil
