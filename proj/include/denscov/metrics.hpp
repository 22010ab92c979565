#pragma once

#include <string>
#include <vector>

#include "denscov/sim.hpp"
#include "denscov/transport.hpp"

namespace denscov {

struct MetricsReport {
  double w2 = 0.0;
  std::string w2_method;        // "exact" | "sinkhorn"
  double w2_epsilon = 0.0;      // 0 for exact
  int w2_iterations = 0;        // 0 for exact
  double w2_marginal_violation = 0.0;
  std::vector<double> avg_remaining;  // percent, per recorded step
  double work_redundancy = 0.0;       // percent
  double wall_time_s = 0.0;
};

/// Coverage error: 2-Wasserstein distance between the visited agent points
/// (each carrying mass alpha, renormalized when the run stopped early) and
/// the reference cloud. Uses the exact solver when both sides fit within
/// exact_limit atoms, otherwise the entropic solver with epsilon =
/// 1e-3 * diam^2 of the combined support. Throws ValidationError when the
/// run produced no agent points.
double coverage_wasserstein(const SimResult& result, const SamplePointCloud& cloud,
                            int exact_limit = kExactTransportLimit);

/// Percent of initial mass still unabsorbed, averaged over agent views, one
/// value per recorded step.
std::vector<double> average_remaining_weight(const SimResult& result);

/// Percent of transported mass in excess of the unit total:
/// 100 * (sum of all plan masses - 1).
double work_redundancy(const SimResult& result);

/// Full report: W2 against result.cloud with solver details recorded,
/// remaining-weight series, redundancy and the run wall time.
MetricsReport build_metrics(const SimResult& result, int exact_limit = kExactTransportLimit);

}  // namespace denscov
