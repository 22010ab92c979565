#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "denscov/dynamics.hpp"

namespace denscov {

struct ControllerConfig {
  Eigen::MatrixXd Q;        // n x n, symmetric PSD state penalty
  Eigen::MatrixXd R;        // m x m, symmetric PD input penalty
  int horizon = 1;          // T >= 1; ignored by the nonlinear law (single step)
  std::optional<double> u_max;  // component-wise clamp on u*, applied after solving
};

/// Result of the weight-normalized nearest-sample selection: the index set,
/// the mass gamma_j drawn from each point (summing to alpha), their sum and
/// the weighted centroid of the selected points.
struct LocalSelection {
  std::vector<int> indices;
  Eigen::VectorXd gammas;
  double gamma_sum = 0.0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
};

/// Rank sample points by distance-to-weight ratio |q_j - y| / beta_j
/// (zero-weight points excluded, ties by ascending index) and keep the
/// shortest prefix whose cumulative weight reaches alpha. Every selected
/// point contributes its full weight except the last, which contributes the
/// residual. Throws InsufficientMassError when alpha > sum(beta) + 1e-12.
LocalSelection select_local_samples(const Eigen::Vector2d& y, const Eigen::VectorXd& beta,
                                    const std::vector<Eigen::Vector2d>& positions, double alpha);

/// Saddle-point system of the horizon-T tracking problem, stored by its
/// repeating blocks. Unknowns are the stacked states x^{1..T}, multipliers
/// lambda^{1..T} and inputs u^{0..T-1} relative to the current state.
struct KktSystem {
  Eigen::MatrixXd Qbar;     // gamma_sum * C^T C + Q
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd R;
  int T = 1;
  Eigen::VectorXd f1_block; // gamma_sum * C^T qbar, repeated down F1
  Eigen::VectorXd f2_head;  // -A x, first block of F2 (rest zero)

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  /// Materialize the full (2n+m)T square matrix (test and audit use).
  Eigen::MatrixXd dense() const;
  /// Materialize the full right-hand side (F1; F2; 0).
  Eigen::VectorXd rhs() const;
};

KktSystem assemble_kkt(const LtiModel& model, const ControllerConfig& config,
                       const LocalSelection& selection, const Eigen::VectorXd& x);

/// The six distinct blocks of the inverse saddle-point matrix, computed from
/// the block structure (never by dense inversion). Off-diagonal blocks are
/// stored row-major: i12 is the (state, multiplier) block, etc.
struct StructuredInverse {
  Eigen::MatrixXd i11;  // nT x nT
  Eigen::MatrixXd i12;  // nT x nT
  Eigen::MatrixXd i13;  // nT x mT
  Eigen::MatrixXd i22;  // nT x nT
  Eigen::MatrixXd i23;  // nT x mT
  Eigen::MatrixXd i33;  // mT x mT

  Eigen::MatrixXd dense() const;
};

/// Throws NumericalError when the reduced input-space system is too
/// ill-conditioned to factor.
StructuredInverse invert_structured(const KktSystem& kkt);

struct HorizonControl {
  Eigen::VectorXd u;        // first input of the optimal sequence (clamped if configured)
  Eigen::MatrixXd u_seq;    // m x T optimal input sequence (unclamped)
  Eigen::MatrixXd x_seq;    // n x T optimal states x^{1..T}
  Eigen::MatrixXd lambda_seq;  // n x T multipliers
  bool clamped = false;
};

/// Finite-horizon optimal control toward the selected samples. Solves the
/// saddle-point system through its block structure in O(T^2) block work.
HorizonControl optimal_control_lti(const LtiModel& model, const ControllerConfig& config,
                                   const LocalSelection& selection, const Eigen::VectorXd& x);

/// Single-step law for control-affine models:
/// u* = (R + g^T Qbar g)^{-1} g^T (gamma_sum C^T qbar - Qbar f(x)).
/// The configured horizon is ignored.
HorizonControl optimal_control_nonlinear(const NonlinearModel& model,
                                         const ControllerConfig& config,
                                         const LocalSelection& selection,
                                         const Eigen::VectorXd& x);

/// Horizon cost of a trajectory under a frozen selection:
/// sum_{i=0}^{T-1} (0.5 sum_j gamma_j |C x^i - q_j|^2 + 0.5 x^i' Q x^i
/// + 0.5 u^i' R u^i) plus the same state terms at x^T. States must satisfy
/// the model recursion for the given inputs (checked, ValidationError).
double stage_cost(const AnyModel& model, const ControllerConfig& config,
                  const LocalSelection& selection,
                  const std::vector<Eigen::Vector2d>& sample_positions,
                  const Eigen::MatrixXd& states, const Eigen::MatrixXd& inputs);

/// Precomputed factorization of the horizon solve for a fixed model, config
/// and selection mass. Per-step work is two block recursions and one
/// back-substitution; results match optimal_control_lti exactly.
class LtiHorizonSolver {
 public:
  LtiHorizonSolver(const LtiModel& model, const ControllerConfig& config, double gamma_sum);

  /// First optimal input for current state x and selection centroid qbar.
  Eigen::VectorXd control(const Eigen::VectorXd& x, const Eigen::Vector2d& centroid) const;

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd C_;
  Eigen::MatrixXd Qbar_;
  std::vector<Eigen::MatrixXd> G_;  // G[i*T+j] = A^{i-j} B for i >= j
  Eigen::LLT<Eigen::MatrixXd> llt_; // factor of E33 + G^T E11 G
  double gamma_sum_;
  int T_;
  int n_;
  int m_;
  std::optional<double> u_max_;
};

}  // namespace denscov
