#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace denscov {

/// Sparse transport decision of one agent step: mass gamma_j moved from
/// sample point j onto the agent point at `target`, total mass alpha.
struct TransportPlan {
  std::vector<std::pair<int, double>> entries;  // (sample index, gamma), ascending index
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  double alpha = 0.0;

  double total() const;
};

/// Weighted atoms for distance computations; weights must be positive and
/// sum to one within 1e-12.
struct DiscreteDistribution {
  std::vector<Eigen::Vector2d> positions;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(positions.size()); }
};

void validate_distribution(const DiscreteDistribution& d);

/// Optimal single-sink transport: move mass alpha onto the point y from the
/// supplies beta at the sample positions, minimizing sum gamma_j |y - q_j|^2
/// subject to 0 <= gamma_j <= beta_j. Filling in ascending squared-distance
/// order (ties by index) is exactly optimal here. Throws
/// InsufficientMassError when alpha > sum(beta) + 1e-12.
TransportPlan weight_update_plan(const Eigen::Vector2d& y, const Eigen::VectorXd& beta,
                                 const std::vector<Eigen::Vector2d>& positions, double alpha);

/// beta_j -= gamma_j for every plan entry. Results below -1e-12 are a
/// contract violation; tiny negatives are clamped to zero.
void apply_transport(Eigen::VectorXd& beta, const TransportPlan& plan);

/// Largest per-side atom count accepted by the exact solver.
inline constexpr int kExactTransportLimit = 500;

/// Exact 2-Wasserstein distance between weighted point sets, solved as a
/// dense transportation problem by network simplex on the bipartite graph.
/// Throws ValidationError when either side exceeds kExactTransportLimit.
double wasserstein2_exact(const DiscreteDistribution& a, const DiscreteDistribution& b);

struct SinkhornResult {
  double distance = 0.0;        // sqrt of the rounded-plan cost
  int iterations = 0;
  double marginal_violation = 0.0;  // L1 violation before rounding
  bool converged = false;
  double epsilon = 0.0;
};

/// Entropy-regularized approximation with log-stabilized, over-relaxed
/// scaling and a stepped epsilon schedule. The returned cost is evaluated on
/// the plan rounded to exact marginals, so it is feasible regardless of early
/// termination. Non-convergence is flagged, not thrown.
SinkhornResult wasserstein2_sinkhorn(const DiscreteDistribution& a,
                                     const DiscreteDistribution& b, double epsilon,
                                     int max_iters = 20000, double tol = 1e-6);

}  // namespace denscov
