#include "denscov/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "denscov/errors.hpp"

namespace denscov {

double TransportPlan::total() const {
  double t = 0.0;
  for (const auto& [j, g] : entries) t += g;
  return t;
}

void validate_distribution(const DiscreteDistribution& d) {
  if (d.positions.empty()) throw ValidationError("distribution: empty support");
  if (d.weights.size() != static_cast<Eigen::Index>(d.positions.size())) {
    throw ValidationError("distribution: weights and positions size mismatch");
  }
  double total = 0.0;
  for (int i = 0; i < d.weights.size(); ++i) {
    if (!(d.weights[i] > 0.0) || !std::isfinite(d.weights[i])) {
      throw ValidationError("distribution: weights must be positive and finite");
    }
    if (!d.positions[i].allFinite()) {
      throw ValidationError("distribution: positions must be finite");
    }
    total += d.weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("distribution: weights must sum to 1 within 1e-12");
  }
}

TransportPlan weight_update_plan(const Eigen::Vector2d& y, const Eigen::VectorXd& beta,
                                 const std::vector<Eigen::Vector2d>& positions, double alpha) {
  if (beta.size() != static_cast<Eigen::Index>(positions.size())) {
    throw ValidationError("weight_update_plan: beta and positions size mismatch");
  }
  if (!(alpha > 0.0)) throw ValidationError("weight_update_plan: alpha must be positive");
  double total = 0.0;
  for (int j = 0; j < beta.size(); ++j) {
    if (!(beta[j] >= 0.0) || !std::isfinite(beta[j])) {
      throw ValidationError("weight_update_plan: beta must be finite and nonnegative");
    }
    total += beta[j];
  }
  if (alpha > total + 1e-12) {
    throw InsufficientMassError("weight_update_plan: alpha exceeds remaining weight");
  }

  // With a single sink, filling nearest-first is exactly optimal.
  std::vector<std::pair<double, int>> order;
  order.reserve(positions.size());
  for (int j = 0; j < beta.size(); ++j) {
    if (beta[j] > 0.0) order.emplace_back((positions[j] - y).squaredNorm(), j);
  }
  std::sort(order.begin(), order.end());

  TransportPlan plan;
  plan.target = y;
  plan.alpha = alpha;
  double acc = 0.0;
  for (const auto& [key, j] : order) {
    if (acc >= alpha) break;
    const double take = std::min(beta[j], alpha - acc);
    plan.entries.emplace_back(j, take);
    acc += take;
  }
  std::sort(plan.entries.begin(), plan.entries.end());
  return plan;
}

void apply_transport(Eigen::VectorXd& beta, const TransportPlan& plan) {
  for (const auto& [j, g] : plan.entries) {
    if (j < 0 || j >= beta.size()) throw ValidationError("apply_transport: index out of range");
    const double next = beta[j] - g;
    if (next < -1e-12) {
      throw InsufficientMassError("apply_transport: plan exceeds supply at sample " +
                                  std::to_string(j));
    }
    beta[j] = std::max(0.0, next);
  }
}

namespace {

// Dense transportation problem solved by network simplex on the bipartite
// graph. The basis is a spanning tree over M supply and N demand nodes;
// entering arcs are picked by most-negative reduced cost, falling back to
// lowest-index (Bland) during degenerate stretches so the walk terminates.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                   const Eigen::MatrixXd& cost)
      : M_(static_cast<int>(supply.size())),
        N_(static_cast<int>(demand.size())),
        V_(M_ + N_),
        cost_(cost),
        a_(supply),
        b_(demand) {
    // Force exact balance; validated to match within 1e-9 upstream.
    const double sa = a_.sum();
    b_ *= sa / b_.sum();
    b_[N_ - 1] = sa - b_.head(N_ - 1).sum();
  }

  double solve() {
    northwest_init();
    const double tol = 1e-12 * (1.0 + cost_.cwiseAbs().maxCoeff());
    const long long pivot_cap = 4LL * V_ * V_ * std::max(8, V_);
    long long pivots = 0;
    int stale = 0;
    bool bland = false;
    while (true) {
      compute_potentials();
      int ei = -1, ej = -1;
      if (!find_entering(tol, bland, ei, ej)) break;
      const double moved = pivot(ei, ej);
      if (++pivots > pivot_cap) {
        throw NumericalError("wasserstein2_exact: pivot limit exceeded");
      }
      if (moved <= 0.0) {
        if (++stale > V_ + 8) bland = true;
      } else {
        stale = 0;
        bland = false;
      }
    }
    double total = 0.0;
    for (int k = 0; k < V_ - 1; ++k) total += flow_[k] * cost_(src_[k], dst_[k] - M_);
    return total;
  }

 private:
  void northwest_init() {
    src_.assign(V_ - 1, 0);
    dst_.assign(V_ - 1, 0);
    flow_.assign(V_ - 1, 0.0);
    basic_.assign(static_cast<std::size_t>(M_) * N_, false);
    Eigen::VectorXd rem_a = a_, rem_b = b_;
    int i = 0, j = 0, k = 0;
    while (k < V_ - 1) {
      const double move = std::min(rem_a[i], rem_b[j]);
      src_[k] = i;
      dst_[k] = M_ + j;
      flow_[k] = move;
      basic_[static_cast<std::size_t>(i) * N_ + j] = true;
      rem_a[i] -= move;
      rem_b[j] -= move;
      ++k;
      // Advance one side only; on ties this leaves a zero-flow basic arc.
      if (i < M_ - 1 && (rem_a[i] <= rem_b[j] || j == N_ - 1)) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void compute_potentials() {
    adj_.assign(V_, {});
    for (int k = 0; k < V_ - 1; ++k) {
      adj_[src_[k]].push_back(k);
      adj_[dst_[k]].push_back(k);
    }
    u_.assign(M_, 0.0);
    v_.assign(N_, 0.0);
    parent_.assign(V_, -1);
    parent_arc_.assign(V_, -1);
    depth_.assign(V_, 0);
    std::vector<int> stack = {0};
    std::vector<bool> seen(V_, false);
    seen[0] = true;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int k : adj_[node]) {
        const int other = (src_[k] == node) ? dst_[k] : src_[k];
        if (seen[other]) continue;
        seen[other] = true;
        parent_[other] = node;
        parent_arc_[other] = k;
        depth_[other] = depth_[node] + 1;
        if (other >= M_) {
          v_[other - M_] = cost_(src_[k], other - M_) - u_[src_[k]];
        } else {
          u_[other] = cost_(other, dst_[k] - M_) - v_[dst_[k] - M_];
        }
        stack.push_back(other);
      }
    }
  }

  bool find_entering(double tol, bool bland, int& ei, int& ej) const {
    double best = -tol;
    ei = -1;
    for (int i = 0; i < M_; ++i) {
      for (int j = 0; j < N_; ++j) {
        if (basic_[static_cast<std::size_t>(i) * N_ + j]) continue;
        const double rc = cost_(i, j) - u_[i] - v_[j];
        if (rc < best) {
          best = rc;
          ei = i;
          ej = j;
          if (bland) return true;
        }
      }
    }
    return ei >= 0;
  }

  // Push flow around the unique tree cycle closed by arc (ei, ej); returns
  // the amount moved.
  double pivot(int ei, int ej) {
    int x = ei, y = M_ + ej;
    std::vector<std::pair<int, int>> minus;  // (arc, +1/-1) arcs losing flow
    std::vector<std::pair<int, int>> cycle;  // (arc, sign)
    while (x != y) {
      if (depth_[x] >= depth_[y]) {
        const int k = parent_arc_[x];
        // Walking x -> parent on the return leg of the cycle: a source node
        // leaves along the arc's own direction, so that arc loses flow.
        cycle.emplace_back(k, x < M_ ? -1 : +1);
        x = parent_[x];
      } else {
        const int k = parent_arc_[y];
        cycle.emplace_back(k, y < M_ ? +1 : -1);
        y = parent_[y];
      }
    }
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (const auto& [k, sign] : cycle) {
      if (sign >= 0) continue;
      // Ties break toward the lexicographically smallest (source, sink)
      // pair, keeping degenerate pivot sequences finite.
      const bool better =
          flow_[k] < theta ||
          (flow_[k] == theta && leaving >= 0 &&
           (src_[k] < src_[leaving] ||
            (src_[k] == src_[leaving] && dst_[k] < dst_[leaving])));
      if (better) {
        theta = flow_[k];
        leaving = k;
      }
    }
    for (const auto& [k, sign] : cycle) flow_[k] += sign * theta;
    basic_[static_cast<std::size_t>(src_[leaving]) * N_ + (dst_[leaving] - M_)] = false;
    basic_[static_cast<std::size_t>(ei) * N_ + ej] = true;
    src_[leaving] = ei;
    dst_[leaving] = M_ + ej;
    flow_[leaving] = theta;
    return theta;
  }

  int M_, N_, V_;
  Eigen::MatrixXd cost_;
  Eigen::VectorXd a_, b_;
  std::vector<int> src_, dst_;
  std::vector<double> flow_;
  std::vector<bool> basic_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> u_, v_;
  std::vector<int> parent_, parent_arc_, depth_;
};

Eigen::MatrixXd squared_distance_matrix(const DiscreteDistribution& a,
                                        const DiscreteDistribution& b) {
  Eigen::MatrixXd C(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < b.size(); ++j) {
      C(i, j) = (a.positions[i] - b.positions[j]).squaredNorm();
    }
  }
  return C;
}

}  // namespace

double wasserstein2_exact(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  validate_distribution(a);
  validate_distribution(b);
  if (a.size() > kExactTransportLimit || b.size() > kExactTransportLimit) {
    throw ValidationError("wasserstein2_exact: support exceeds " +
                          std::to_string(kExactTransportLimit) +
                          " atoms per side; use wasserstein2_sinkhorn");
  }
  TransportSimplex simplex(a.weights, b.weights, squared_distance_matrix(a, b));
  return std::sqrt(std::max(0.0, simplex.solve()));
}

SinkhornResult wasserstein2_sinkhorn(const DiscreteDistribution& a,
                                     const DiscreteDistribution& b, double epsilon,
                                     int max_iters, double tol) {
  validate_distribution(a);
  validate_distribution(b);
  if (!(epsilon > 0.0)) throw ValidationError("wasserstein2_sinkhorn: epsilon must be positive");
  const int M = a.size(), N = b.size();
  const Eigen::MatrixXd C = squared_distance_matrix(a, b);
  const double maxC = C.maxCoeff();

  SinkhornResult res;
  res.epsilon = epsilon;

  Eigen::VectorXd f = Eigen::VectorXd::Zero(M);  // absorbed log-domain potentials
  Eigen::VectorXd g = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(M);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(N);
  Eigen::MatrixXd K(M, N);

  double eps = std::max(epsilon, maxC > 0.0 ? maxC / 4.0 : epsilon);
  auto rebuild = [&]() {
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < N; ++j) {
        K(i, j) = std::exp((f[i] + g[j] - C(i, j)) / eps);
      }
    }
  };
  auto absorb = [&]() {
    f += eps * u.array().log().matrix();
    g += eps * v.array().log().matrix();
    u.setOnes();
    v.setOnes();
  };
  // Over-relaxed scaling update: same fixed point as the plain a/Kv sweep but
  // a much better contraction rate when eps is small against the cost spread.
  constexpr double kOmega = 1.7;
  auto relax = [](Eigen::VectorXd& w, const Eigen::VectorXd& target,
                  const Eigen::VectorXd& denom) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double plain = target[i] / std::max(denom[i], 1e-300);
      const double lg = (1.0 - kOmega) * std::log(std::max(w[i], 1e-300)) +
                        kOmega * std::log(std::max(plain, 1e-300));
      w[i] = std::exp(std::min(lg, 690.0));
    }
  };

  rebuild();
  int iters = 0;
  double violation = std::numeric_limits<double>::infinity();
  while (true) {
    const bool final_stage = eps <= epsilon;
    const double stage_tol = final_stage ? tol : std::max(tol, 1e-3);
    int stage_iters = 0;
    while (iters < max_iters) {
      Eigen::VectorXd Kv = K * v;
      relax(u, a.weights, Kv);
      Eigen::VectorXd Ktu = K.transpose() * u;
      // Both marginals of the current plan diag(u) K diag(v): the relaxed row
      // sweep leaves a residual on the a side too.
      violation = 0.0;
      for (int i = 0; i < M; ++i) violation += std::abs(u[i] * Kv[i] - a.weights[i]);
      for (int j = 0; j < N; ++j) violation += std::abs(v[j] * Ktu[j] - b.weights[j]);
      ++iters;
      ++stage_iters;
      if (violation < stage_tol) break;
      relax(v, b.weights, Ktu);
      if (u.maxCoeff() > 1e30 || v.maxCoeff() > 1e30) {
        absorb();
        rebuild();
      }
      if (!final_stage && stage_iters >= 100) break;
    }
    if (final_stage || iters >= max_iters) break;
    absorb();
    eps = std::max(epsilon, eps / 5.0);
    rebuild();
  }
  res.iterations = iters;
  res.marginal_violation = violation;
  res.converged = violation < tol;

  // Round the plan to exact marginals so the reported cost is always the
  // cost of a feasible plan: scale rows then columns down to their targets,
  // then spread the leftover mass proportionally.
  Eigen::MatrixXd plan(M, N);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) plan(i, j) = u[i] * K(i, j) * v[j];
  }
  Eigen::VectorXd rows = plan.rowwise().sum();
  for (int i = 0; i < M; ++i) {
    const double s = rows[i] > 0.0 ? std::min(1.0, a.weights[i] / rows[i]) : 0.0;
    plan.row(i) *= s;
  }
  Eigen::VectorXd cols = plan.colwise().sum();
  for (int j = 0; j < N; ++j) {
    const double s = cols[j] > 0.0 ? std::min(1.0, b.weights[j] / cols[j]) : 0.0;
    plan.col(j) *= s;
  }
  Eigen::VectorXd err_a = (a.weights - plan.rowwise().sum()).cwiseMax(0.0);
  Eigen::VectorXd err_b = (b.weights - plan.colwise().sum().transpose()).cwiseMax(0.0);
  const double deficit = err_a.sum();
  double cost = (plan.array() * C.array()).sum();
  if (deficit > 1e-15) cost += err_a.dot(C * err_b) / deficit;
  res.distance = std::sqrt(std::max(0.0, cost));
  return res;
}

}  // namespace denscov
