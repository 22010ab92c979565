#include "denscov/controller.hpp"

#include <algorithm>
#include <cmath>

#include "denscov/errors.hpp"

namespace denscov {

namespace {

void check_symmetric(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() != M.cols()) throw ValidationError(std::string(name) + ": must be square");
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ValidationError(std::string(name) + ": must be symmetric");
  }
}

// A^0 .. A^{count-1}
std::vector<Eigen::MatrixXd> matrix_powers(const Eigen::MatrixXd& A, int count) {
  std::vector<Eigen::MatrixXd> pow(count);
  pow[0] = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  for (int i = 1; i < count; ++i) pow[i] = A * pow[i - 1];
  return pow;
}

Eigen::VectorXd clamp_components(const Eigen::VectorXd& u, double bound, bool& clamped) {
  Eigen::VectorXd out = u;
  for (int i = 0; i < out.size(); ++i) {
    if (out[i] > bound) {
      out[i] = bound;
      clamped = true;
    } else if (out[i] < -bound) {
      out[i] = -bound;
      clamped = true;
    }
  }
  return out;
}

}  // namespace

LocalSelection select_local_samples(const Eigen::Vector2d& y, const Eigen::VectorXd& beta,
                                    const std::vector<Eigen::Vector2d>& positions, double alpha) {
  if (beta.size() != static_cast<Eigen::Index>(positions.size())) {
    throw ValidationError("select_local_samples: beta and positions size mismatch");
  }
  if (!(alpha > 0.0)) throw ValidationError("select_local_samples: alpha must be positive");
  double total = 0.0;
  for (int j = 0; j < beta.size(); ++j) {
    if (!(beta[j] >= 0.0) || !std::isfinite(beta[j])) {
      throw ValidationError("select_local_samples: beta must be finite and nonnegative");
    }
    total += beta[j];
  }
  if (alpha > total + 1e-12) {
    throw InsufficientMassError("select_local_samples: alpha exceeds remaining weight");
  }

  // Rank by distance-to-weight ratio; light points far away rank last.
  std::vector<std::pair<double, int>> order;
  order.reserve(positions.size());
  for (int j = 0; j < beta.size(); ++j) {
    if (beta[j] > 0.0) order.emplace_back((positions[j] - y).norm() / beta[j], j);
  }
  std::sort(order.begin(), order.end());

  LocalSelection sel;
  std::vector<double> gammas;
  double acc = 0.0;
  Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
  for (const auto& [key, j] : order) {
    if (acc >= alpha) break;
    const double take = std::min(beta[j], alpha - acc);
    sel.indices.push_back(j);
    gammas.push_back(take);
    weighted += take * positions[j];
    acc += take;
  }
  sel.gammas = Eigen::Map<Eigen::VectorXd>(gammas.data(), gammas.size());
  sel.gamma_sum = acc;
  sel.centroid = weighted / acc;
  return sel;
}

KktSystem assemble_kkt(const LtiModel& model, const ControllerConfig& config,
                       const LocalSelection& selection, const Eigen::VectorXd& x) {
  validate_model(model);
  check_symmetric(config.Q, "config.Q");
  check_symmetric(config.R, "config.R");
  if (config.Q.rows() != model.n()) throw ValidationError("config.Q: size must match state dim");
  if (config.R.rows() != model.m()) throw ValidationError("config.R: size must match input dim");
  if (config.horizon < 1) throw ValidationError("config.horizon: must be >= 1");
  if (x.size() != model.n()) throw ValidationError("assemble_kkt: x size mismatch");
  if (!(selection.gamma_sum > 0.0)) throw ValidationError("assemble_kkt: empty selection");

  KktSystem kkt;
  kkt.Qbar = selection.gamma_sum * model.C.transpose() * model.C + config.Q;
  kkt.A = model.A;
  kkt.B = model.B;
  kkt.R = config.R;
  kkt.T = config.horizon;
  kkt.f1_block = model.C.transpose() * (selection.gamma_sum * selection.centroid);
  kkt.f2_head = -model.A * x;
  return kkt;
}

Eigen::MatrixXd KktSystem::dense() const {
  const int N = n(), M = m();
  const int nt = N * T, mt = M * T;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2 * nt + mt, 2 * nt + mt);
  for (int i = 0; i < T; ++i) {
    E.block(i * N, i * N, N, N) = Qbar;
    E.block(i * N, nt + i * N, N, N) = -Eigen::MatrixXd::Identity(N, N);
    if (i + 1 < T) E.block(i * N, nt + (i + 1) * N, N, N) = A.transpose();
    E.block(nt + i * N, 2 * nt + i * M, N, M) = B;
    E.block(2 * nt + i * M, 2 * nt + i * M, M, M) = R;
  }
  E.block(nt, 0, nt, nt) = E.block(0, nt, nt, nt).transpose().eval();
  E.block(2 * nt, nt, mt, nt) = E.block(nt, 2 * nt, nt, mt).transpose().eval();
  return E;
}

Eigen::VectorXd KktSystem::rhs() const {
  const int N = n(), M = m();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(2 * N * T + M * T);
  for (int i = 0; i < T; ++i) F.segment(i * N, N) = f1_block;
  F.segment(N * T, N) = f2_head;
  return F;
}

Eigen::MatrixXd StructuredInverse::dense() const {
  const int nt = static_cast<int>(i11.rows());
  const int mt = static_cast<int>(i33.rows());
  Eigen::MatrixXd inv(2 * nt + mt, 2 * nt + mt);
  inv.block(0, 0, nt, nt) = i11;
  inv.block(0, nt, nt, nt) = i12;
  inv.block(0, 2 * nt, nt, mt) = i13;
  inv.block(nt, 0, nt, nt) = i12.transpose();
  inv.block(nt, nt, nt, nt) = i22;
  inv.block(nt, 2 * nt, nt, mt) = i23;
  inv.block(2 * nt, 0, mt, nt) = i13.transpose();
  inv.block(2 * nt, nt, mt, nt) = i23.transpose();
  inv.block(2 * nt, 2 * nt, mt, mt) = i33;
  return inv;
}

StructuredInverse invert_structured(const KktSystem& kkt) {
  const int n = kkt.n(), m = kkt.m(), T = kkt.T;
  const int nt = n * T, mt = m * T;
  const auto Apow = matrix_powers(kkt.A, T);

  // Closed-form inverse of the dynamics block: lower block-Toeplitz in powers
  // of A. Wt = E12^{-T}, G = E12^{-T} E23.
  Eigen::MatrixXd Wt = Eigen::MatrixXd::Zero(nt, nt);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nt, mt);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j <= i; ++j) {
      Wt.block(i * n, j * n, n, n) = -Apow[i - j];
      G.block(i * n, j * m, n, m) = -Apow[i - j] * kkt.B;
    }
  }

  // Apply the block-diagonal E11 without materializing it.
  auto apply_E11 = [&](const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (int i = 0; i < T; ++i) {
      out.middleRows(i * n, n) = kkt.Qbar * X.middleRows(i * n, n);
    }
    return out;
  };

  const Eigen::MatrixXd MG = apply_E11(G);
  Eigen::MatrixXd D = G.transpose() * MG;
  for (int i = 0; i < T; ++i) D.block(i * m, i * m, m, m) += kkt.R;

  Eigen::LLT<Eigen::MatrixXd> llt(D);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("invert_structured: reduced input system is not positive definite");
  }

  StructuredInverse inv;
  inv.i33 = llt.solve(Eigen::MatrixXd::Identity(mt, mt));
  inv.i13 = -G * inv.i33;
  inv.i11 = G * inv.i33 * G.transpose();
  const Eigen::MatrixXd MWt = apply_E11(Wt);
  inv.i12 = Wt - inv.i11 * MWt;
  inv.i23 = Wt.transpose() * (MG * inv.i33);
  const Eigen::MatrixXd S = Wt.transpose() * MWt;  // E12^{-1} E11 E12^{-T}
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nt, nt);  // E23 (E^{-1})33 E23^T
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) {
      H.block(i * n, j * n, n, n) = kkt.B * inv.i33.block(i * m, j * m, m, m) * kkt.B.transpose();
    }
  }
  inv.i22 = S * (H * S - Eigen::MatrixXd::Identity(nt, nt));
  return inv;
}

LtiHorizonSolver::LtiHorizonSolver(const LtiModel& model, const ControllerConfig& config,
                                   double gamma_sum)
    : A_(model.A),
      C_(model.C),
      gamma_sum_(gamma_sum),
      T_(config.horizon),
      n_(model.n()),
      m_(model.m()),
      u_max_(config.u_max) {
  validate_model(model);
  check_symmetric(config.Q, "config.Q");
  check_symmetric(config.R, "config.R");
  if (config.horizon < 1) throw ValidationError("config.horizon: must be >= 1");
  if (!(gamma_sum > 0.0)) throw ValidationError("LtiHorizonSolver: gamma_sum must be positive");

  Qbar_ = gamma_sum * model.C.transpose() * model.C + config.Q;
  const auto Apow = matrix_powers(model.A, T_);
  G_.assign(static_cast<std::size_t>(T_) * T_, Eigen::MatrixXd());
  for (int i = 0; i < T_; ++i) {
    for (int j = 0; j <= i; ++j) {
      G_[static_cast<std::size_t>(i) * T_ + j] = -Apow[i - j] * model.B;
    }
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m_ * T_, m_ * T_);
  for (int a = 0; a < T_; ++a) {
    for (int b = a; b < T_; ++b) {
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m_, m_);
      for (int i = b; i < T_; ++i) {
        block += G_[static_cast<std::size_t>(i) * T_ + a].transpose() * Qbar_ *
                 G_[static_cast<std::size_t>(i) * T_ + b];
      }
      D.block(a * m_, b * m_, m_, m_) = block;
      if (a != b) D.block(b * m_, a * m_, m_, m_) = block.transpose();
    }
    D.block(a * m_, a * m_, m_, m_) += config.R;
  }
  llt_.compute(D);
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("LtiHorizonSolver: reduced input system is not positive definite");
  }
}

Eigen::VectorXd LtiHorizonSolver::control(const Eigen::VectorXd& x,
                                          const Eigen::Vector2d& centroid) const {
  if (x.size() != n_) throw ValidationError("LtiHorizonSolver::control: x size mismatch");
  const Eigen::VectorXd f1 = C_.transpose() * (gamma_sum_ * centroid);

  // v_i = Qbar A^{i+1} x - f1 (free-dynamics rollout), then rhs = -G^T v by a
  // backward recursion s_i = v_i + A^T s_{i+1}.
  Eigen::MatrixXd v(n_, T_);
  Eigen::VectorXd xi = x;
  for (int i = 0; i < T_; ++i) {
    xi = A_ * xi;
    v.col(i) = Qbar_ * xi - f1;
  }
  Eigen::VectorXd rhs(m_ * T_);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n_);
  for (int j = T_ - 1; j >= 0; --j) {
    s = v.col(j) + A_.transpose() * s;
    // G[j][j] = -B, so -G^T s contributes B^T s at block j.
    rhs.segment(j * m_, m_) = -G_[static_cast<std::size_t>(j) * T_ + j].transpose() * s;
  }
  // rhs currently holds +B^T s = -(G^T v); solve D ubar = G^T(E11 Wt F2 - F1).
  const Eigen::VectorXd ubar = llt_.solve(-rhs);
  Eigen::VectorXd u = ubar.head(m_);
  bool clamped = false;
  if (u_max_) u = clamp_components(u, *u_max_, clamped);
  return u;
}

HorizonControl optimal_control_lti(const LtiModel& model, const ControllerConfig& config,
                                   const LocalSelection& selection, const Eigen::VectorXd& x) {
  const KktSystem kkt = assemble_kkt(model, config, selection, x);
  const int n = kkt.n(), m = kkt.m(), T = kkt.T;
  const auto Apow = matrix_powers(kkt.A, T + 1);

  // ubar = (E33 + G^T E11 G)^{-1} G^T (E11 E12^{-T} F2 - F1), with
  // E12^{-T} F2 the free-dynamics rollout A^i x.
  std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(T) * T);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j <= i; ++j) {
      G[static_cast<std::size_t>(i) * T + j] = -Apow[i - j] * kkt.B;
    }
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m * T, m * T);
  for (int a = 0; a < T; ++a) {
    for (int b = a; b < T; ++b) {
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, m);
      for (int i = b; i < T; ++i) {
        block += G[static_cast<std::size_t>(i) * T + a].transpose() * kkt.Qbar *
                 G[static_cast<std::size_t>(i) * T + b];
      }
      D.block(a * m, b * m, m, m) = block;
      if (a != b) D.block(b * m, a * m, m, m) = block.transpose();
    }
    D.block(a * m, a * m, m, m) += kkt.R;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(D);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("optimal_control_lti: reduced input system is not positive definite");
  }

  Eigen::MatrixXd v(n, T);
  for (int i = 0; i < T; ++i) v.col(i) = kkt.Qbar * (Apow[i + 1] * x) - kkt.f1_block;
  Eigen::VectorXd gtv(m * T);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  for (int j = T - 1; j >= 0; --j) {
    s = v.col(j) + kkt.A.transpose() * s;
    gtv.segment(j * m, m) = -kkt.B.transpose() * s;
  }
  // D ubar = G^T v with v = E11 E12^{-T} F2 - F1; gtv already carries the
  // minus sign from the G blocks.
  const Eigen::VectorXd ubar = llt.solve(gtv);

  HorizonControl out;
  out.u_seq.resize(m, T);
  for (int i = 0; i < T; ++i) out.u_seq.col(i) = ubar.segment(i * m, m);
  out.x_seq.resize(n, T);
  Eigen::VectorXd xi = x;
  for (int i = 0; i < T; ++i) {
    xi = kkt.A * xi + kkt.B * out.u_seq.col(i);
    out.x_seq.col(i) = xi;
  }
  out.lambda_seq.resize(n, T);
  out.lambda_seq.col(T - 1) = kkt.Qbar * out.x_seq.col(T - 1) - kkt.f1_block;
  for (int i = T - 2; i >= 0; --i) {
    out.lambda_seq.col(i) =
        kkt.Qbar * out.x_seq.col(i) + kkt.A.transpose() * out.lambda_seq.col(i + 1) -
        kkt.f1_block;
  }
  out.u = out.u_seq.col(0);
  if (config.u_max) out.u = clamp_components(out.u, *config.u_max, out.clamped);
  return out;
}

HorizonControl optimal_control_nonlinear(const NonlinearModel& model,
                                         const ControllerConfig& config,
                                         const LocalSelection& selection,
                                         const Eigen::VectorXd& x) {
  check_symmetric(config.Q, "config.Q");
  check_symmetric(config.R, "config.R");
  if (config.Q.rows() != model.n()) throw ValidationError("config.Q: size must match state dim");
  if (config.R.rows() != model.m()) throw ValidationError("config.R: size must match input dim");
  if (x.size() != model.n()) throw ValidationError("optimal_control_nonlinear: x size mismatch");
  if (!(selection.gamma_sum > 0.0)) {
    throw ValidationError("optimal_control_nonlinear: empty selection");
  }

  const Eigen::VectorXd fx = model.f(x);
  const Eigen::MatrixXd gx = model.g(x);
  const Eigen::MatrixXd Qbar =
      selection.gamma_sum * model.C.transpose() * model.C + config.Q;
  const Eigen::MatrixXd D = config.R + gx.transpose() * Qbar * gx;
  Eigen::LLT<Eigen::MatrixXd> llt(D);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("optimal_control_nonlinear: gain system is not positive definite");
  }
  const Eigen::VectorXd f1 =
      model.C.transpose() * (selection.gamma_sum * selection.centroid);
  const Eigen::VectorXd u = llt.solve(gx.transpose() * (f1 - Qbar * fx));

  HorizonControl out;
  out.u_seq = u;
  out.x_seq = fx + gx * u;
  out.lambda_seq = Qbar * out.x_seq - f1;
  out.u = u;
  if (config.u_max) out.u = clamp_components(out.u, *config.u_max, out.clamped);
  return out;
}

double stage_cost(const AnyModel& model, const ControllerConfig& config,
                  const LocalSelection& selection,
                  const std::vector<Eigen::Vector2d>& sample_positions,
                  const Eigen::MatrixXd& states, const Eigen::MatrixXd& inputs) {
  const int n = model_state_dim(model);
  const int T = static_cast<int>(inputs.cols());
  if (states.rows() != n || states.cols() != T + 1) {
    throw ValidationError("stage_cost: states must be n x (T+1)");
  }
  if (inputs.rows() != model_input_dim(model)) {
    throw ValidationError("stage_cost: inputs row count must match input dim");
  }
  for (int i = 0; i < T; ++i) {
    const Eigen::VectorXd next = step_model(model, states.col(i), inputs.col(i));
    const double err = (next - states.col(i + 1)).norm();
    if (err > 1e-9 * (1.0 + next.norm())) {
      throw ValidationError("stage_cost: trajectory inconsistent with model at step " +
                            std::to_string(i));
    }
  }

  const Eigen::MatrixXd& C =
      std::visit([](const auto& m) -> const Eigen::MatrixXd& { return m.C; }, model);
  auto tracking = [&](const Eigen::VectorXd& xi) {
    const Eigen::Vector2d yi = C * xi;
    double acc = 0.0;
    for (int k = 0; k < selection.gammas.size(); ++k) {
      acc += selection.gammas[k] *
             (yi - sample_positions[selection.indices[k]]).squaredNorm();
    }
    return 0.5 * acc + 0.5 * xi.dot(config.Q * xi);
  };

  double J = tracking(states.col(T));
  for (int i = 0; i < T; ++i) {
    J += tracking(states.col(i)) + 0.5 * inputs.col(i).dot(config.R * inputs.col(i));
  }
  return J;
}

}  // namespace denscov
