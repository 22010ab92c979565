// Acceptance gates for the whole stack: solver exactness against dense
// oracles, transport optimality against enumeration, bookkeeping order
// properties on replayed histories, and fleet-level trend checks on full
// runs. Each criterion prints exactly one [PASS]/[FAIL] line with its
// measured margins; the process exits nonzero when any gate fails.
// Tolerances are pinned here, next to the criterion they guard.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "denscov/controller.hpp"
#include "denscov/density.hpp"
#include "denscov/dynamics.hpp"
#include "denscov/errors.hpp"
#include "denscov/metrics.hpp"
#include "denscov/rng.hpp"
#include "denscov/sharing.hpp"
#include "denscov/sim.hpp"
#include "denscov/transport.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace {

using namespace denscov;
using testutil::random_distribution;
using testutil::random_lti;
using testutil::random_matrix;
using testutil::random_pd;
using testutil::random_psd;
using testutil::random_selection;

constexpr double kKktTol = 1e-8;            // residual and dense-solve agreement
constexpr double kInverseTol = 1e-8;        // structured vs dense inverse
constexpr double kMinimalityTol = 1e-10;    // allowed cost decrease under perturbation
constexpr double kNonlinearTol = 1e-4;      // single-step law vs numerical minimizer
constexpr double kConstantGTol = 1e-10;     // single-step law vs one-step horizon solve
constexpr double kGreedyLpTol = 1e-10;      // greedy plan vs LP vertex enumeration
constexpr double kExactW2Tol = 1e-9;        // exact solver vs plan enumeration, axioms
constexpr double kSinkhornRelTol = 0.02;    // entropic vs exact, relative
constexpr double kOrderTol = 1e-9;          // remaining-weight order and omission sign
constexpr double kCentralRedundancyTol = 1e-7;  // percent
constexpr double kMassTol = 1e-12;          // per-step transported mass vs alpha
constexpr double kBetaFloor = -1e-12;       // lowest admissible remaining weight

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", v);
  return buf;
}

std::string fix(double v, int prec = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// Column-stack an n x T matrix into the solver's (x^1..x^T) vector layout.
Eigen::VectorXd stack_cols(const Eigen::MatrixXd& M) {
  return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

// --- 1: structured horizon solve is exact ---------------------------------

Outcome kkt_exactness() {
  Rng rng(4101);
  const int ns[] = {2, 4, 8};
  const int Ts[] = {1, 5, 15};
  double worst_residual = 0.0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = ns[trial % 3];
    const int T = Ts[(trial / 3) % 3];
    auto model = random_lti(rng, n, 2);
    model.A /= std::sqrt(static_cast<double>(n));
    ControllerConfig cfg;
    cfg.Q = random_psd(rng, n, 0.4);
    cfg.R = random_pd(rng, 2);
    cfg.horizon = T;
    const auto fx = random_selection(rng, 2 + trial % 5, rng.uniform(0.3, 1.2));
    const Eigen::VectorXd x = random_matrix(rng, n, 1);

    const auto kkt = assemble_kkt(model, cfg, fx.selection, x);
    const auto hc = optimal_control_lti(model, cfg, fx.selection, x);
    const Eigen::VectorXd x_seq = stack_cols(hc.x_seq);
    const Eigen::VectorXd l_seq = stack_cols(hc.lambda_seq);
    const Eigen::VectorXd u_seq = stack_cols(hc.u_seq);

    worst_residual = std::max(worst_residual, oracle::kkt_residual(kkt, x_seq, l_seq, u_seq));
    const auto ref = oracle::dense_kkt_solve(kkt);
    worst_gap = std::max(worst_gap, (u_seq - ref.u).norm() / (1.0 + ref.u.norm()));
  }
  return {worst_residual < kKktTol && worst_gap < kKktTol,
          "200 instances, max rel residual " + sci(worst_residual) + ", max input gap " +
              sci(worst_gap)};
}

// --- 2: block-structured inverse matches dense inversion ------------------

Outcome structured_inverse() {
  Rng rng(4202);
  const int ns[] = {2, 3, 4};
  const int Ts[] = {1, 2, 3, 5};
  double worst_inverse = 0.0;
  double worst_identity = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = ns[trial % 3];
    const int T = Ts[(trial / 3) % 4];
    auto model = random_lti(rng, n, 2);
    model.A /= std::sqrt(static_cast<double>(n));
    ControllerConfig cfg;
    cfg.Q = random_psd(rng, n, 0.5);
    cfg.R = random_pd(rng, 2);
    cfg.horizon = T;
    const auto fx = random_selection(rng, 3, rng.uniform(0.3, 1.5));
    const auto kkt = assemble_kkt(model, cfg, fx.selection, random_matrix(rng, n, 1));

    const Eigen::MatrixXd E = kkt.dense();
    const Eigen::MatrixXd inv = invert_structured(kkt).dense();
    const Eigen::MatrixXd dense_inv = Eigen::FullPivLU<Eigen::MatrixXd>(E).inverse();
    const double scale = dense_inv.cwiseAbs().maxCoeff();
    worst_inverse = std::max(worst_inverse, (inv - dense_inv).cwiseAbs().maxCoeff() / scale);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(E.rows(), E.cols());
    worst_identity = std::max(worst_identity, (E * inv - I).cwiseAbs().maxCoeff());
  }
  return {worst_inverse < kInverseTol && worst_identity < kInverseTol,
          "100 instances, max inverse gap " + sci(worst_inverse) + ", max E*inv(E)-I " +
              sci(worst_identity)};
}

// --- 3: the solved sequence is a global minimum ----------------------------

Outcome global_minimality() {
  Rng rng(4303);
  const int Ts[] = {1, 3, 5, 8};
  double min_increase = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 2 + inst % 3;
    const int T = Ts[inst % 4];
    auto model = random_lti(rng, n, 2);
    model.A /= std::sqrt(static_cast<double>(n));
    ControllerConfig cfg;
    cfg.Q = random_psd(rng, n, 0.3);
    cfg.R = random_pd(rng, 2);
    cfg.horizon = T;
    const auto fx = random_selection(rng, 4, rng.uniform(0.3, 1.0));
    const Eigen::VectorXd x = random_matrix(rng, n, 1);
    const auto hc = optimal_control_lti(model, cfg, fx.selection, x);

    auto rollout = [&](const Eigen::MatrixXd& inputs) {
      Eigen::MatrixXd states(n, T + 1);
      states.col(0) = x;
      for (int t = 0; t < T; ++t) states.col(t + 1) = step_lti(model, states.col(t), inputs.col(t));
      return states;
    };
    const double J_star =
        stage_cost(AnyModel{model}, cfg, fx.selection, fx.positions, rollout(hc.u_seq), hc.u_seq);
    for (int p = 0; p < 100; ++p) {
      const double scale = (p % 2 == 0) ? 0.25 : 1e-3;  // coarse and near-stationary probes
      const Eigen::MatrixXd inputs = hc.u_seq + scale * random_matrix(rng, 2, T);
      const double J =
          stage_cost(AnyModel{model}, cfg, fx.selection, fx.positions, rollout(inputs), inputs);
      min_increase = std::min(min_increase, J - J_star);
    }
  }
  return {min_increase >= -kMinimalityTol,
          "50x100 perturbations, min cost increase " + sci(min_increase)};
}

// --- 4: the solve exists without controllability assumptions ---------------

Outcome solver_existence() {
  Rng rng(4404);
  int solved = 0;
  double worst_residual = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const int T = 1 + trial % 5;
    LtiModel model;
    switch (trial % 4) {
      case 0: {  // singular dynamics: rank-one A
        model.A = random_matrix(rng, n, 1) * random_matrix(rng, n, 1).transpose();
        model.B = random_matrix(rng, n, 2);
        break;
      }
      case 1: {  // non-controllable pair: identity A with rank-one B
        model.A = Eigen::MatrixXd::Identity(n, n);
        model.B.resize(n, 2);
        model.B.col(0) = random_matrix(rng, n, 1);
        model.B.col(1) = 2.0 * model.B.col(0);
        break;
      }
      case 2: {  // no control authority at all
        model.A = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
        model.B = Eigen::MatrixXd::Zero(n, 2);
        break;
      }
      default: {
        model.A = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
        model.B = random_matrix(rng, n, 2);
        break;
      }
    }
    model.C = random_matrix(rng, 2, n);
    ControllerConfig cfg;
    cfg.Q = (trial % 10 == 0) ? Eigen::MatrixXd::Zero(n, n) : random_psd(rng, n, 0.4);
    cfg.R = random_pd(rng, 2);
    cfg.horizon = T;
    const auto fx = random_selection(rng, 3, rng.uniform(0.3, 1.0));
    const Eigen::VectorXd x = random_matrix(rng, n, 1);
    try {
      const auto kkt = assemble_kkt(model, cfg, fx.selection, x);
      const auto hc = optimal_control_lti(model, cfg, fx.selection, x);
      if (!hc.u_seq.allFinite() || !hc.x_seq.allFinite() || !hc.lambda_seq.allFinite()) continue;
      const double r = oracle::kkt_residual(kkt, stack_cols(hc.x_seq), stack_cols(hc.lambda_seq),
                                            stack_cols(hc.u_seq));
      worst_residual = std::max(worst_residual, r);
      if (r < kKktTol) ++solved;
    } catch (const NumericalError&) {
      // counted as a failed instance
    }
  }
  return {solved == 100, std::to_string(solved) +
                             "/100 degenerate instances solved, max residual " +
                             sci(worst_residual)};
}

// --- 5: single-step law on control-affine models ---------------------------

Outcome nonlinear_single_step() {
  Rng rng(4505);
  double worst_unicycle = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = build_unicycle({0.1});
    ControllerConfig cfg;
    cfg.Q = random_psd(rng, 3, 0.2);
    cfg.R = random_pd(rng, 2);
    cfg.horizon = 1;
    const auto fx = random_selection(rng, 3, rng.uniform(0.3, 1.0));
    Eigen::VectorXd x(3);
    x << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3.0, 3.0);
    const auto hc = optimal_control_nonlinear(model, cfg, fx.selection, x);
    const auto ref = oracle::single_step_minimizer(model, cfg, fx.selection, fx.positions, x);
    worst_unicycle = std::max(worst_unicycle, (hc.u - ref).norm());
  }

  double worst_constant_g = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    auto lti = random_lti(rng, 3, 2);
    const NonlinearModel model{
        [A = lti.A](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x); },
        [B = lti.B](const Eigen::VectorXd&) { return B; }, lti.C, 3, 2};
    ControllerConfig cfg;
    cfg.Q = random_psd(rng, 3, 0.4);
    cfg.R = random_pd(rng, 2);
    cfg.horizon = 1;
    const auto fx = random_selection(rng, 3, rng.uniform(0.3, 1.0));
    const Eigen::VectorXd x = random_matrix(rng, 3, 1);
    const auto nl = optimal_control_nonlinear(model, cfg, fx.selection, x);
    const auto li = optimal_control_lti(lti, cfg, fx.selection, x);
    worst_constant_g = std::max(worst_constant_g, (nl.u - li.u).norm());
  }
  return {worst_unicycle < kNonlinearTol && worst_constant_g < kConstantGTol,
          "max unicycle gap " + sci(worst_unicycle) + ", max constant-g gap " +
              sci(worst_constant_g)};
}

// --- 6: greedy single-sink transport is LP-optimal -------------------------

Outcome weight_update_optimality() {
  Rng rng(4606);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int count = 1 + trial % 12;
    std::vector<Eigen::Vector2d> positions;
    Eigen::VectorXd beta(count);
    for (int j = 0; j < count; ++j) {
      positions.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3));
      beta[j] = rng.uniform(0.05, 1.0);
    }
    const Eigen::Vector2d y(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const double alpha = rng.uniform(0.05, 0.95) * beta.sum();

    const auto plan = weight_update_plan(y, beta, positions, alpha);
    double objective = 0.0;
    for (const auto& [j, g] : plan.entries) objective += g * (positions[j] - y).squaredNorm();
    const double optimum = oracle::single_sink_lp_optimum(y, beta, positions, alpha);
    worst = std::max(worst, std::abs(objective - optimum));
  }
  return {worst < kGreedyLpTol, "500 instances, max objective gap " + sci(worst)};
}

// --- 7: distance solvers against enumeration, axioms, entropic path --------

Outcome wasserstein_correctness() {
  Rng rng(4707);
  double worst_enum = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_distribution(rng, 1 + trial % 4, 1.5);
    const auto b = random_distribution(rng, 1 + (trial / 4) % 4, 1.5);
    worst_enum = std::max(worst_enum, std::abs(wasserstein2_exact(a, b) -
                                               oracle::w2_enumerated(a, b)));
  }

  double worst_symmetry = 0.0;
  double worst_triangle = -std::numeric_limits<double>::infinity();
  double worst_self = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_distribution(rng, 2 + trial % 5, 2.0);
    const auto b = random_distribution(rng, 2 + (trial / 5) % 5, 2.0);
    const auto c = random_distribution(rng, 2 + (trial / 25) % 5, 2.0);
    const double ab = wasserstein2_exact(a, b);
    const double bc = wasserstein2_exact(b, c);
    const double ac = wasserstein2_exact(a, c);
    worst_symmetry = std::max(worst_symmetry, std::abs(ab - wasserstein2_exact(b, a)));
    worst_triangle = std::max(worst_triangle, ac - (ab + bc));
    worst_self = std::max(worst_self, wasserstein2_exact(a, a));
  }

  double worst_sinkhorn = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_distribution(rng, 50, 2.0);
    const auto b = random_distribution(rng, 50, 2.0);
    double diam2 = 0.0;
    std::vector<Eigen::Vector2d> support = a.positions;
    support.insert(support.end(), b.positions.begin(), b.positions.end());
    for (std::size_t i = 0; i < support.size(); ++i) {
      for (std::size_t j = i + 1; j < support.size(); ++j) {
        diam2 = std::max(diam2, (support[i] - support[j]).squaredNorm());
      }
    }
    const double exact = wasserstein2_exact(a, b);
    const double approx = wasserstein2_sinkhorn(a, b, 1e-3 * diam2).distance;
    worst_sinkhorn = std::max(worst_sinkhorn, std::abs(approx - exact) / exact);
  }

  const bool ok = worst_enum < kExactW2Tol && worst_symmetry < kExactW2Tol &&
                  worst_triangle < kExactW2Tol && worst_self < kExactW2Tol &&
                  worst_sinkhorn < kSinkhornRelTol;
  return {ok, "max enumeration gap " + sci(worst_enum) + ", axiom slack " +
                  sci(std::max({worst_symmetry, worst_triangle, worst_self})) +
                  ", sinkhorn rel err " + fix(100.0 * worst_sinkhorn, 2) + "%"};
}

// --- 8: bookkeeping order on replayed shared histories ---------------------

Outcome sharing_dominance() {
  Rng rng(4808);
  double worst_truth_over = 0.0;   // truth remaining above the merged view
  double worst_prop_over = 0.0;    // merged view above the baseline view
  double worst_delta = 0.0;        // negative omission
  for (int h = 0; h < 50; ++h) {
    const int L = 3 + h % 3;
    const int N = 6 + h % 7;
    Eigen::VectorXd beta0(N);
    for (int j = 0; j < N; ++j) beta0[j] = rng.uniform(0.2, 1.0);
    beta0 /= beta0.sum();

    std::vector<CoverageLedger> baseline;
    std::vector<CoverageLedger> proposed;
    for (int r = 0; r < L; ++r) {
      baseline.push_back(make_ledger(r, L, beta0));
      proposed.push_back(make_ledger(r, L, beta0));
    }
    Eigen::MatrixXd global = Eigen::MatrixXd::Zero(L, N);

    for (int e = 0; e < 80; ++e) {
      if (rng.uniform() < 0.7) {  // one agent absorbs mass that truly remains
        const int a = static_cast<int>(rng.uniform(0.0, L));
        const int j = static_cast<int>(rng.uniform(0.0, N));
        const Eigen::VectorXd truth = centralized_remaining(global, beta0);
        if (truth[j] > 1e-9) {
          TransportPlan plan;
          plan.entries.emplace_back(j, truth[j] * rng.uniform(0.1, 0.9));
          plan.alpha = plan.entries.front().second;
          record_own_progress(baseline[a], plan);
          record_own_progress(proposed[a], plan);
          global(a, j) += plan.alpha;
        }
      } else {  // a pairwise exchange under each rule
        const int r = static_cast<int>(rng.uniform(0.0, L));
        int s = static_cast<int>(rng.uniform(0.0, L));
        if (s == r) s = (s + 1) % L;
        merge_original(baseline[r], baseline[s]);
        merge_proposed(proposed[r], proposed[s]);
      }

      const Eigen::VectorXd truth = centralized_remaining(global, beta0);
      for (int r = 0; r < L; ++r) {
        worst_truth_over = std::max(worst_truth_over, (truth - proposed[r].beta).maxCoeff());
        worst_prop_over =
            std::max(worst_prop_over, (proposed[r].beta - baseline[r].beta).maxCoeff());
        worst_delta = std::max(
            worst_delta, -omission_delta(baseline[r].beta, proposed[r].gamma, beta0).minCoeff());
      }
    }
  }
  const bool ok = worst_truth_over <= kOrderTol && worst_prop_over <= kOrderTol &&
                  worst_delta <= kOrderTol;
  return {ok, "50 histories, order slack " + sci(std::max(worst_truth_over, worst_prop_over)) +
                  ", omission slack " + sci(worst_delta)};
}

// --- 9: finer energy granularity improves coverage -------------------------

Scenario coverage_scenario(int steps, std::uint64_t seed) {
  Scenario sc;
  sc.domain = {0, 10, 0, 10};
  GaussianComponent g1;
  g1.mean = Eigen::Vector2d(3, 3);
  g1.cov << 0.8, 0, 0, 0.8;
  g1.weight = 1.0;
  GaussianComponent g2;
  g2.mean = Eigen::Vector2d(7, 6.5);
  g2.cov << 1.2, -0.2, -0.2, 1.2;
  g2.weight = 1.5;
  sc.density.kind = DensityKind::GaussianMixture;
  sc.density.components = {g1, g2};
  sc.num_samples = 300;
  sc.seed = seed;
  sc.method = SharingMethod::Proposed;
  sc.r_comm = 2.0;

  AgentSpec agent;
  agent.kind = SingleIntegratorParams{0.1};
  agent.controller.Q = Eigen::MatrixXd::Zero(2, 2);
  agent.controller.R = 1e-6 * Eigen::MatrixXd::Identity(2, 2);
  agent.controller.horizon = 15;
  agent.controller.u_max = 0.5;
  agent.steps = steps;
  sc.agents.assign(6, agent);
  return sc;
}

Outcome coverage_trend() {
  const int terminals[] = {1000, 2000, 3000};
  double med[3];
  for (int t = 0; t < 3; ++t) {
    std::vector<double> w2s;
    for (int s = 0; s < 10; ++s) {
      const auto result = run_scenario(coverage_scenario(terminals[t], 9001 + s));
      w2s.push_back(coverage_wasserstein(result, result.cloud));
    }
    med[t] = median(w2s);
  }
  return {med[0] > med[1] && med[1] > med[2],
          "median w2 " + fix(med[0]) + " -> " + fix(med[1]) + " -> " + fix(med[2]) +
              " over terminal steps 1000/2000/3000"};
}

// --- 10: sharing rules cut redundant work and track the full-information view

Scenario fleet_scenario(SharingMethod method, double r_comm, std::uint64_t seed) {
  Scenario sc;
  sc.domain = {0, 8, 0, 8};
  GaussianComponent g1;
  g1.mean = Eigen::Vector2d(2.5, 2.5);
  g1.cov << 0.6, 0, 0, 0.6;
  g1.weight = 1.0;
  GaussianComponent g2;
  g2.mean = Eigen::Vector2d(5.5, 5.5);
  g2.cov << 0.9, 0.1, 0.1, 0.9;
  g2.weight = 1.3;
  sc.density.kind = DensityKind::GaussianMixture;
  sc.density.components = {g1, g2};
  sc.num_samples = 300;
  sc.seed = seed;
  sc.method = method;
  sc.r_comm = r_comm;

  AgentSpec agent;
  agent.kind = PlanarQuadrotorParams{};
  Eigen::VectorXd q_diag(8);
  q_diag << 0, 0.01, 0.01, 0.01, 0, 0.01, 0.01, 0.01;  // damp rates, not positions
  agent.controller.Q = Eigen::MatrixXd(q_diag.asDiagonal());
  agent.controller.R = 1e-4 * Eigen::MatrixXd::Identity(2, 2);
  agent.controller.horizon = 15;
  agent.steps = 150;
  agent.max_steps = 750;  // overtime: agents fly until their own view is drained
  sc.agents.assign(8, agent);
  return sc;
}

// Mean vertical gap between two percent-remaining curves over their common
// prefix (the reference is the full-information run of the same seed).
double remaining_gap(const SimResult& run, const SimResult& reference) {
  const auto s = average_remaining_weight(run);
  const auto c = average_remaining_weight(reference);
  const std::size_t k = std::min(s.size(), c.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += s[i] - c[i];
  return acc / static_cast<double>(k);
}

Outcome sharing_efficiency() {
  std::vector<double> red_original, red_proposed, gap_r1, gap_r2;
  double worst_central = 0.0;
  for (int s = 0; s < 20; ++s) {
    const std::uint64_t seed = 7001 + s;
    const auto original = run_scenario(fleet_scenario(SharingMethod::Original, 1.0, seed));
    const auto proposed1 = run_scenario(fleet_scenario(SharingMethod::Proposed, 1.0, seed));
    const auto proposed2 = run_scenario(fleet_scenario(SharingMethod::Proposed, 2.0, seed));
    const auto central = run_scenario(fleet_scenario(SharingMethod::Centralized, 1.0, seed));

    red_original.push_back(work_redundancy(original));
    red_proposed.push_back(work_redundancy(proposed1));
    worst_central = std::max(worst_central, std::abs(work_redundancy(central)));
    gap_r1.push_back(remaining_gap(proposed1, central));
    gap_r2.push_back(remaining_gap(proposed2, central));
  }
  const double mo = median(red_original);
  const double mp = median(red_proposed);
  const double g1 = median(gap_r1);
  const double g2 = median(gap_r2);
  const bool ok = mp <= mo && worst_central < kCentralRedundancyTol && g2 < g1;
  return {ok, "20 paired seeds, median redundancy " + fix(mp, 1) + "% vs " + fix(mo, 1) +
                  "% baseline, central " + sci(worst_central) + "%, remaining gap " +
                  fix(g2, 1) + " < " + fix(g1, 1) + " at wider comm"};
}

// --- 11: mass conservation and bit-reproducible runs ------------------------

Scenario audit_scenario(SharingMethod method, int steps, int max_steps, double r_comm,
                        std::uint64_t seed) {
  Scenario sc;
  sc.domain = {-5, 5, -5, 5};
  GaussianComponent g;
  sc.density.components = {g};  // unit gaussian at the origin
  sc.num_samples = 60;
  sc.seed = seed;
  sc.method = method;
  sc.r_comm = r_comm;

  AgentSpec agent;
  agent.kind = SingleIntegratorParams{0.1};
  agent.controller.Q = Eigen::MatrixXd::Zero(2, 2);
  agent.controller.R = 1e-6 * Eigen::MatrixXd::Identity(2, 2);
  agent.controller.horizon = 10;
  agent.controller.u_max = 0.6;
  agent.steps = steps;
  agent.max_steps = max_steps;
  sc.agents.assign(3, agent);
  return sc;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome conservation_determinism() {
  double worst_mass = 0.0;
  double lowest_beta = 0.0;
  auto audit = [&](const SimResult& result) {
    for (const auto& agent_plans : result.plans) {
      for (const auto& plan : agent_plans) {
        worst_mass = std::max(worst_mass, std::abs(plan.total() - result.alpha));
      }
    }
    for (const auto& ledger : result.final_ledgers) {
      lowest_beta = std::min(lowest_beta, ledger.beta.minCoeff());
    }
    for (const auto& row : result.remaining_series) {
      lowest_beta = std::min(lowest_beta, row.minCoeff());
    }
  };

  for (const auto method :
       {SharingMethod::Original, SharingMethod::Proposed, SharingMethod::Centralized}) {
    audit(run_scenario(audit_scenario(method, 25, 0, 1.5, 501)));
  }
  // overtime run that exercises the redundant-absorption path
  audit(run_scenario(audit_scenario(SharingMethod::Proposed, 40, 160, 100.0, 502)));

  // in-memory reproducibility
  const auto sc = audit_scenario(SharingMethod::Proposed, 20, 0, 1.5, 503);
  const auto r1 = run_scenario(sc);
  const auto r2 = run_scenario(sc);
  audit(r1);
  bool repro = r1.termination == r2.termination && r1.exchanges == r2.exchanges;
  for (int a = 0; a < r1.num_agents() && repro; ++a) {
    if (r1.trajectories[a].size() != r2.trajectories[a].size()) repro = false;
    for (std::size_t k = 0; repro && k < r1.trajectories[a].size(); ++k) {
      if ((r1.trajectories[a][k] - r2.trajectories[a][k]).cwiseAbs().maxCoeff() != 0.0)
        repro = false;
    }
    if (repro && (r1.final_ledgers[a].gamma - r2.final_ledgers[a].gamma).cwiseAbs().maxCoeff() !=
                     0.0)
      repro = false;
  }

  // end-to-end byte identity of written artifacts across a rerun
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "denscov-acceptance-rerun";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    out << R"({
  "domain": {"xmin": -5, "xmax": 5, "ymin": -5, "ymax": 5},
  "density": {"kind": "gaussian_mixture",
              "components": [{"mean": [0, 0], "cov": [[1, 0], [0, 1]]}]},
  "sampling": {"n": 30, "seed": 11},
  "comm": {"method": "proposed", "r_comm": 1.0},
  "penalties": {"q_diag": [0, 0], "r_diag": [1e-6, 1e-6]},
  "u_max": 0.6,
  "agents": [{"model": "single_integrator", "steps": 12, "count": 2}]
})";
  }
  auto run_cli = [&](const std::string& out_dir) {
    const std::string cmd = std::string("\"") + DENSCOV_CLI_PATH + "\" run --config " +
                            (dir / "config.json").string() + " --out " + (dir / out_dir).string() +
                            " > " + (dir / (out_dir + ".log")).string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return status != -1 && WEXITSTATUS(status) == 0;
  };
  bool bytes_equal = run_cli("a") && run_cli("b");
  int files_compared = 0;
  if (bytes_equal) {
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      const auto name = entry.path().filename().string();
      const auto other = dir / "b" / name;
      if (!fs::exists(other)) {
        bytes_equal = false;
        break;
      }
      ++files_compared;
      if (name == "manifest.json") {  // identical module wall time is not promised
        auto ma = nlohmann::json::parse(slurp(entry.path()));
        auto mb = nlohmann::json::parse(slurp(other));
        ma.erase("wall_time_s");
        mb.erase("wall_time_s");
        if (ma != mb) bytes_equal = false;
      } else if (slurp(entry.path()) != slurp(other)) {
        bytes_equal = false;
      }
    }
    if (files_compared == 0) bytes_equal = false;
  }

  const bool ok =
      worst_mass <= kMassTol && lowest_beta >= kBetaFloor && repro && bytes_equal;
  return {ok, "max mass gap " + sci(worst_mass) + ", lowest remaining " + sci(lowest_beta) +
                  (repro ? ", rerun identical" : ", rerun DIVERGED") +
                  (bytes_equal ? ", artifacts byte-equal (" + std::to_string(files_compared) +
                                     " files)"
                               : ", artifacts DIFFER")};
}

struct Criterion {
  const char* name;
  double budget_s;  // 0 = no runtime bound
  Outcome (*fn)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"kkt-exactness", 10.0, kkt_exactness},
      {"structured-inverse", 10.0, structured_inverse},
      {"global-minimality", 0.0, global_minimality},
      {"solver-existence", 0.0, solver_existence},
      {"nonlinear-single-step", 0.0, nonlinear_single_step},
      {"weight-update-optimality", 0.0, weight_update_optimality},
      {"wasserstein-correctness", 0.0, wasserstein_correctness},
      {"sharing-dominance", 0.0, sharing_dominance},
      {"coverage-trend", 300.0, coverage_trend},
      {"sharing-efficiency", 600.0, sharing_efficiency},
      {"conservation-determinism", 0.0, conservation_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& ex) {
      out = {false, std::string("unexpected exception: ") + ex.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && elapsed >= c.budget_s) {
      out.pass = false;
      out.detail += " [exceeded " + fix(c.budget_s, 0) + "s budget]";
    }
    std::printf("[%s] %-26s %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all 11 criteria passed\n");
  } else {
    std::printf("%d of 11 criteria failed\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
