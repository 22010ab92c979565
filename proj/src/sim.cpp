#include "denscov/sim.hpp"

#include <chrono>
#include <cmath>

#include "denscov/errors.hpp"
#include "denscov/rng.hpp"

namespace denscov {

std::string to_string(SharingMethod m) {
  switch (m) {
    case SharingMethod::Original: return "original";
    case SharingMethod::Proposed: return "proposed";
    case SharingMethod::Centralized: return "centralized";
  }
  return "unknown";
}

SharingMethod sharing_method_from_string(const std::string& s) {
  if (s == "original") return SharingMethod::Original;
  if (s == "proposed") return SharingMethod::Proposed;
  if (s == "centralized") return SharingMethod::Centralized;
  throw ValidationError("comm.method: expected original|proposed|centralized, got '" + s + "'");
}

double uniform_alpha(const std::vector<AgentSpec>& agents) {
  if (agents.empty()) throw ValidationError("uniform_alpha: no agents");
  long long total = 0;
  for (const auto& a : agents) {
    if (a.steps < 0) throw ValidationError("uniform_alpha: negative step count");
    total += a.steps;
  }
  if (total < 1) throw ValidationError("uniform_alpha: total nominal steps must be positive");
  return 1.0 / static_cast<double>(total);
}

void validate_scenario(const Scenario& scenario) {
  validate_density(scenario.density, scenario.domain);
  if (scenario.num_samples < 1) throw ValidationError("sampling.n: must be >= 1");
  if (scenario.agents.empty()) throw ValidationError("agents: at least one agent required");
  if (!(scenario.r_comm >= 0.0)) throw ValidationError("comm.r_comm: must be >= 0");
  for (std::size_t r = 0; r < scenario.agents.size(); ++r) {
    const auto& a = scenario.agents[r];
    const std::string key = "agents[" + std::to_string(r) + "]";
    if (a.steps < 0) throw ValidationError(key + ".steps: must be >= 0");
    if (a.max_steps != 0 && a.max_steps < a.steps) {
      throw ValidationError(key + ".max_steps: must be 0 or >= steps");
    }
    const AnyModel model = build_model(a.kind);
    const int n = model_state_dim(model);
    const int m = model_input_dim(model);
    if (a.controller.Q.rows() != n || a.controller.Q.cols() != n) {
      throw ValidationError(key + ": Q must be " + std::to_string(n) + "x" + std::to_string(n) +
                            " for this model");
    }
    if (a.controller.R.rows() != m || a.controller.R.cols() != m) {
      throw ValidationError(key + ": R must be " + std::to_string(m) + "x" + std::to_string(m) +
                            " for this model");
    }
    if (a.controller.horizon < 1) throw ValidationError(key + ".horizon: must be >= 1");
    if (a.controller.u_max && !(*a.controller.u_max > 0.0)) {
      throw ValidationError(key + ".u_max: must be positive");
    }
    if (a.x0) {
      if (a.x0->size() != n) {
        throw ValidationError(key + ".x0: expected " + std::to_string(n) + " entries");
      }
      if (!scenario.domain.contains(model_output(model, *a.x0))) {
        throw ValidationError(key + ".x0: initial position outside domain");
      }
    }
  }
}

namespace {

// Place a position into the state through the output map: each C row of our
// models selects one state component.
Eigen::VectorXd state_from_position(const AnyModel& model, const Eigen::Vector2d& pos) {
  const Eigen::MatrixXd& C =
      std::visit([](const auto& m) -> const Eigen::MatrixXd& { return m.C; }, model);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(C.cols());
  for (int r = 0; r < C.rows(); ++r) {
    int col = 0;
    C.row(r).cwiseAbs().maxCoeff(&col);
    x[col] = pos[r];
  }
  return x;
}

void record_progress_row(CoverageLedger& ledger, int row, const TransportPlan& plan) {
  const int saved = ledger.owner;
  ledger.owner = row;
  record_own_progress(ledger, plan);
  ledger.owner = saved;
}

}  // namespace

bool agent_step(AgentRuntime& rt, CoverageLedger& ledger, int row,
                const std::vector<Eigen::Vector2d>& positions, double alpha) {
  if (rt.stop != AgentStopReason::Running) return false;
  if (rt.steps_taken >= rt.max_steps) {
    rt.stop = AgentStopReason::StepBudget;
    return false;
  }
  if (alpha > ledger.beta.sum() + 1e-12) {
    rt.stop = AgentStopReason::ViewExhausted;
    return false;
  }

  const Eigen::Vector2d y = model_output(rt.model, rt.x);
  const LocalSelection sel = select_local_samples(y, ledger.beta, positions, alpha);

  Eigen::VectorXd u;
  if (rt.solver) {
    u = rt.solver->control(rt.x, sel.centroid);
  } else {
    u = optimal_control_nonlinear(std::get<NonlinearModel>(rt.model), rt.controller, sel, rt.x).u;
  }
  rt.x = step_model(rt.model, rt.x, u);
  rt.trajectory.push_back(rt.x);

  const Eigen::Vector2d y_next = model_output(rt.model, rt.x);
  const TransportPlan plan = weight_update_plan(y_next, ledger.beta, positions, alpha);
  record_progress_row(ledger, row, plan);
  rt.plans.push_back(plan);
  ++rt.steps_taken;
  return true;
}

int sharing_pass(std::vector<AgentRuntime>& agents, double r_comm, SharingMethod method) {
  if (method == SharingMethod::Centralized) return 0;
  const int L = static_cast<int>(agents.size());
  std::vector<std::pair<int, int>> pairs;
  for (int r = 0; r < L; ++r) {
    const Eigen::Vector2d yr = model_output(agents[r].model, agents[r].x);
    for (int s = r + 1; s < L; ++s) {
      const Eigen::Vector2d ys = model_output(agents[s].model, agents[s].x);
      if ((yr - ys).norm() <= r_comm) pairs.emplace_back(r, s);
    }
  }
  if (pairs.empty()) return 0;

  auto merge = [&](int r, int s) {
    if (method == SharingMethod::Proposed) {
      merge_proposed(agents[r].ledger, agents[s].ledger);
    } else {
      merge_original(agents[r].ledger, agents[s].ledger);
    }
  };

  // First pass is the physical exchange; extra passes only settle chained
  // information through mutual neighbors and do not count as new contacts.
  for (const auto& [r, s] : pairs) merge(r, s);
  std::vector<int> counts(L);
  for (int r = 0; r < L; ++r) counts[r] = agents[r].ledger.share_count;
  for (int pass = 1; pass < L; ++pass) {
    bool changed = false;
    for (const auto& [r, s] : pairs) {
      const Eigen::VectorXd beta_r = agents[r].ledger.beta;
      const Eigen::VectorXd beta_s = agents[s].ledger.beta;
      merge(r, s);
      if (!agents[r].ledger.beta.isApprox(beta_r, 0.0) ||
          !agents[s].ledger.beta.isApprox(beta_s, 0.0)) {
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (int r = 0; r < L; ++r) agents[r].ledger.share_count = counts[r];
  return static_cast<int>(pairs.size());
}

SimResult run_scenario(const Scenario& scenario) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_scenario(scenario);

  SimResult result;
  result.cloud =
      sample_points(scenario.density, scenario.domain, scenario.num_samples, scenario.seed);

  const int L = static_cast<int>(scenario.agents.size());
  long long total_steps = 0;
  for (const auto& a : scenario.agents) total_steps += a.steps;
  const double alpha = total_steps > 0 ? uniform_alpha(scenario.agents) : 0.0;
  result.alpha = alpha;

  const bool centralized = scenario.method == SharingMethod::Centralized;
  CoverageLedger shared = make_ledger(0, L, result.cloud.weights);

  std::vector<AgentRuntime> agents(L);
  for (int r = 0; r < L; ++r) {
    AgentRuntime& rt = agents[r];
    rt.index = r;
    rt.model = build_model(scenario.agents[r].kind);
    rt.controller = scenario.agents[r].controller;
    if (std::holds_alternative<LtiModel>(rt.model) && alpha > 0.0) {
      rt.solver = std::make_shared<LtiHorizonSolver>(std::get<LtiModel>(rt.model),
                                                     rt.controller, alpha);
    }
    if (scenario.agents[r].x0) {
      rt.x = *scenario.agents[r].x0;
    } else {
      Rng rng(splitmix64(scenario.seed + 1 + static_cast<std::uint64_t>(r)));
      const Eigen::Vector2d pos(rng.uniform(scenario.domain.xmin, scenario.domain.xmax),
                                rng.uniform(scenario.domain.ymin, scenario.domain.ymax));
      rt.x = state_from_position(rt.model, pos);
    }
    rt.ledger = make_ledger(r, L, result.cloud.weights);
    rt.max_steps = scenario.agents[r].max_steps > 0 ? scenario.agents[r].max_steps
                                                    : scenario.agents[r].steps;
    rt.trajectory.push_back(rt.x);
    if (alpha == 0.0) rt.stop = AgentStopReason::StepBudget;  // nothing planned anywhere
  }

  auto remaining_row = [&]() {
    Eigen::VectorXd row(L);
    for (int r = 0; r < L; ++r) {
      row[r] = centralized ? shared.beta.sum() : agents[r].ledger.beta.sum();
    }
    return row;
  };
  result.remaining_series.push_back(remaining_row());

  long long budget_total = 0;
  for (const auto& rt : agents) budget_total += rt.max_steps;

  for (long long k = 0; alpha > 0.0 && k < budget_total + 1; ++k) {
    bool any = false;
    for (int r = 0; r < L; ++r) {
      if (agents[r].stop != AgentStopReason::Running) continue;
      // The centralized method books every step against one live ledger, so
      // agents act on the freshest global view, in index order.
      CoverageLedger& view = centralized ? shared : agents[r].ledger;
      if (agent_step(agents[r], view, r, result.cloud.positions, alpha)) any = true;
    }
    if (!any) break;
    result.exchanges += sharing_pass(agents, scenario.r_comm, scenario.method);
    result.remaining_series.push_back(remaining_row());
  }

  if (centralized) {
    for (int r = 0; r < L; ++r) {
      agents[r].ledger.gamma = shared.gamma;
      agents[r].ledger.beta = shared.beta;
    }
  }

  bool all_budget = true, all_mass = true;
  for (const auto& rt : agents) {
    all_budget = all_budget && rt.stop == AgentStopReason::StepBudget;
    all_mass = all_mass && rt.stop == AgentStopReason::ViewExhausted;
  }
  result.termination = all_mass ? "mass-exhausted" : (all_budget ? "step-budget" : "mixed");

  result.trajectories.reserve(L);
  for (int r = 0; r < L; ++r) {
    result.trajectories.push_back(agents[r].trajectory);
    std::vector<Eigen::Vector2d> ys;
    ys.reserve(agents[r].trajectory.size());
    for (const auto& x : agents[r].trajectory) ys.push_back(model_output(agents[r].model, x));
    result.outputs.push_back(std::move(ys));
    result.plans.push_back(agents[r].plans);
    result.final_ledgers.push_back(agents[r].ledger);
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace denscov
