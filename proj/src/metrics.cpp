#include "denscov/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "denscov/errors.hpp"

namespace denscov {

namespace {

struct W2Detail {
  double value = 0.0;
  std::string method;
  double epsilon = 0.0;
  int iterations = 0;
  double marginal_violation = 0.0;
};

DiscreteDistribution agent_point_distribution(const SimResult& result) {
  DiscreteDistribution d;
  for (const auto& agent_plans : result.plans) {
    for (const auto& plan : agent_plans) d.positions.push_back(plan.target);
  }
  if (d.positions.empty()) {
    throw ValidationError("coverage_wasserstein: run produced no agent points");
  }
  // Every agent point carries mass alpha; renormalizing keeps early-stopped
  // runs comparable.
  d.weights = Eigen::VectorXd::Constant(d.positions.size(),
                                        1.0 / static_cast<double>(d.positions.size()));
  return d;
}

W2Detail coverage_w2_detail(const SimResult& result, const SamplePointCloud& cloud,
                            int exact_limit) {
  const DiscreteDistribution agents = agent_point_distribution(result);
  DiscreteDistribution ref;
  ref.positions = cloud.positions;
  const double total = cloud.weights.sum();
  ref.weights = cloud.weights / total;

  W2Detail out;
  if (agents.size() <= exact_limit && ref.size() <= exact_limit) {
    out.method = "exact";
    out.value = wasserstein2_exact(agents, ref);
    return out;
  }
  // Entropic scale tied to the extent of the combined supports.
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto extend = [&](const Eigen::Vector2d& p) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  };
  for (const auto& p : agents.positions) extend(p);
  for (const auto& p : ref.positions) extend(p);
  const double diam2 = (xmax - xmin) * (xmax - xmin) + (ymax - ymin) * (ymax - ymin);
  const double eps = 1e-3 * std::max(diam2, 1e-12);
  const SinkhornResult sk = wasserstein2_sinkhorn(agents, ref, eps);
  out.method = "sinkhorn";
  out.value = sk.distance;
  out.epsilon = eps;
  out.iterations = sk.iterations;
  out.marginal_violation = sk.marginal_violation;
  return out;
}

}  // namespace

double coverage_wasserstein(const SimResult& result, const SamplePointCloud& cloud,
                            int exact_limit) {
  return coverage_w2_detail(result, cloud, exact_limit).value;
}

std::vector<double> average_remaining_weight(const SimResult& result) {
  std::vector<double> out;
  out.reserve(result.remaining_series.size());
  for (const auto& row : result.remaining_series) {
    out.push_back(row.mean() * 100.0);
  }
  return out;
}

double work_redundancy(const SimResult& result) {
  double transported = 0.0;
  for (const auto& agent_plans : result.plans) {
    for (const auto& plan : agent_plans) transported += plan.total();
  }
  return (transported - 1.0) * 100.0;
}

MetricsReport build_metrics(const SimResult& result, int exact_limit) {
  MetricsReport report;
  const W2Detail w2 = coverage_w2_detail(result, result.cloud, exact_limit);
  report.w2 = w2.value;
  report.w2_method = w2.method;
  report.w2_epsilon = w2.epsilon;
  report.w2_iterations = w2.iterations;
  report.w2_marginal_violation = w2.marginal_violation;
  report.avg_remaining = average_remaining_weight(result);
  report.work_redundancy = work_redundancy(result);
  report.wall_time_s = result.wall_time_s;
  return report;
}

}  // namespace denscov
