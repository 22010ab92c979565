#include "denscov/sharing.hpp"

#include <string>

#include "denscov/errors.hpp"

namespace denscov {

namespace {

void check_compatible(const CoverageLedger& a, const CoverageLedger& b) {
  if (a.points() != b.points() || a.agents() != b.agents()) {
    throw ValidationError("sharing: ledger shapes differ");
  }
}

// Remaining weight implied by a knowledge matrix; negatives below the audit
// tolerance are clamped (they arise from double coverage discovered late).
Eigen::VectorXd implied_remaining(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& beta0) {
  Eigen::VectorXd beta = beta0 - gamma.colwise().sum().transpose();
  return beta.cwiseMax(0.0);
}

}  // namespace

CoverageLedger make_ledger(int owner, int num_agents, const Eigen::VectorXd& beta0) {
  if (owner < 0 || owner >= num_agents) throw ValidationError("make_ledger: owner out of range");
  for (int j = 0; j < beta0.size(); ++j) {
    if (!(beta0[j] >= 0.0)) throw ValidationError("make_ledger: beta0 must be nonnegative");
  }
  CoverageLedger l;
  l.owner = owner;
  l.beta0 = beta0;
  l.beta = beta0;
  l.gamma = Eigen::MatrixXd::Zero(num_agents, beta0.size());
  return l;
}

void record_own_progress(CoverageLedger& ledger, const TransportPlan& plan) {
  for (const auto& [j, g] : plan.entries) {
    if (j < 0 || j >= ledger.points()) {
      throw ValidationError("record_own_progress: sample index out of range");
    }
    const double next = ledger.beta[j] - g;
    if (next < -1e-12) {
      throw InsufficientMassError("record_own_progress: plan exceeds view at sample " +
                                  std::to_string(j));
    }
    ledger.gamma(ledger.owner, j) += g;
    ledger.beta[j] = std::max(0.0, next);
  }
}

void merge_proposed(CoverageLedger& a, CoverageLedger& b) {
  check_compatible(a, b);
  const Eigen::MatrixXd merged = a.gamma.cwiseMax(b.gamma);
  a.gamma = merged;
  b.gamma = merged;
  a.beta = implied_remaining(a.gamma, a.beta0);
  b.beta = implied_remaining(b.gamma, b.beta0);
  ++a.share_count;
  ++b.share_count;
}

void merge_original(CoverageLedger& a, CoverageLedger& b) {
  check_compatible(a, b);
  const Eigen::VectorXd merged = a.beta.cwiseMin(b.beta);
  a.beta = merged;
  b.beta = merged;
  ++a.share_count;
  ++b.share_count;
}

Eigen::VectorXd centralized_remaining(const Eigen::MatrixXd& global_gamma,
                                      const Eigen::VectorXd& beta0) {
  if (global_gamma.cols() != beta0.size()) {
    throw ValidationError("centralized_remaining: shape mismatch");
  }
  const Eigen::VectorXd beta = beta0 - global_gamma.colwise().sum().transpose();
  for (int j = 0; j < beta.size(); ++j) {
    if (beta[j] < -1e-12) {
      throw NumericalError("centralized_remaining: negative remaining weight at sample " +
                           std::to_string(j));
    }
  }
  return beta.cwiseMax(0.0);
}

Eigen::VectorXd omission_delta(const Eigen::VectorXd& beta_baseline,
                               const Eigen::MatrixXd& gamma_shadow,
                               const Eigen::VectorXd& beta0) {
  if (gamma_shadow.cols() != beta0.size() || beta_baseline.size() != beta0.size()) {
    throw ValidationError("omission_delta: shape mismatch");
  }
  return beta_baseline - (beta0 - gamma_shadow.colwise().sum().transpose());
}

}  // namespace denscov
