#pragma once

#include <Eigen/Dense>

#include "denscov/transport.hpp"

namespace denscov {

/// One agent's bookkeeping of coverage progress: its remaining-weight view
/// beta and its knowledge matrix Gamma, where row l accumulates the mass this
/// agent knows agent l has absorbed per sample point. Row `owner` is always
/// the agent's true progress; other rows are lower bounds learned by merging.
struct CoverageLedger {
  int owner = 0;
  Eigen::VectorXd beta0;   // initial weights, shared by the fleet
  Eigen::VectorXd beta;    // this agent's remaining-weight view, >= 0
  Eigen::MatrixXd gamma;   // L x N knowledge matrix
  int share_count = 0;

  int agents() const { return static_cast<int>(gamma.rows()); }
  int points() const { return static_cast<int>(gamma.cols()); }
};

CoverageLedger make_ledger(int owner, int num_agents, const Eigen::VectorXd& beta0);

/// Apply the agent's own transport plan: add to row `owner` and subtract
/// from beta (clamped at zero; below -1e-12 is a contract violation).
void record_own_progress(CoverageLedger& ledger, const TransportPlan& plan);

/// Knowledge-exchange rule: both ledgers take the entrywise max of each
/// knowledge row, then recompute beta = max(0, beta0 - column sums).
/// Increments both share counts.
void merge_proposed(CoverageLedger& a, CoverageLedger& b);

/// Baseline exchange rule: both ledgers take the entrywise min of the two
/// remaining-weight views; knowledge rows are not exchanged.
/// Increments both share counts.
void merge_original(CoverageLedger& a, CoverageLedger& b);

/// Remaining weights under full information: beta0 - column sums of the
/// global knowledge matrix. Entries below -1e-12 throw NumericalError
/// (bookkeeping corruption); tiny negatives clamp to zero.
Eigen::VectorXd centralized_remaining(const Eigen::MatrixXd& global_gamma,
                                      const Eigen::VectorXd& beta0);

/// Per-point omission of the baseline view relative to what a knowledge
/// matrix accounts for: beta_baseline - (beta0 - colsum(gamma_shadow)).
/// Nonnegative whenever both track the same history.
Eigen::VectorXd omission_delta(const Eigen::VectorXd& beta_baseline,
                               const Eigen::MatrixXd& gamma_shadow,
                               const Eigen::VectorXd& beta0);

}  // namespace denscov
