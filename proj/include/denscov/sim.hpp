#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "denscov/controller.hpp"
#include "denscov/density.hpp"
#include "denscov/dynamics.hpp"
#include "denscov/sharing.hpp"
#include "denscov/transport.hpp"

namespace denscov {

enum class SharingMethod { Original, Proposed, Centralized };

std::string to_string(SharingMethod m);
SharingMethod sharing_method_from_string(const std::string& s);

struct AgentSpec {
  ModelKind kind;
  ControllerConfig controller;
  std::optional<Eigen::VectorXd> x0;  // full state; empty -> seeded uniform position
  int steps = 0;       // nominal step count M, drives the uniform mass alpha
  int max_steps = 0;   // step budget; 0 means equal to `steps`
};

struct Scenario {
  Bounds domain;
  DensitySpec density;
  int num_samples = 0;
  std::uint64_t seed = 0;
  std::vector<AgentSpec> agents;
  SharingMethod method = SharingMethod::Proposed;
  double r_comm = 0.0;
};

/// alpha = 1 / sum of nominal step counts. Throws ValidationError when the
/// total is zero (no steps planned anywhere).
double uniform_alpha(const std::vector<AgentSpec>& agents);

enum class AgentStopReason { Running, StepBudget, ViewExhausted };

/// Mutable per-agent state threaded through the loop.
struct AgentRuntime {
  int index = 0;
  AnyModel model;
  ControllerConfig controller;
  std::shared_ptr<LtiHorizonSolver> solver;  // set for LTI models
  Eigen::VectorXd x;
  CoverageLedger ledger;
  int steps_taken = 0;
  int max_steps = 0;
  AgentStopReason stop = AgentStopReason::Running;

  std::vector<Eigen::VectorXd> trajectory;   // x^0 .. x^K
  std::vector<TransportPlan> plans;          // one per executed step
};

/// One step of one agent against the remaining-weight view in `ledger`:
/// select local samples at the current output, apply the optimal control,
/// then transport mass alpha onto the new output position and record it in
/// row `row` of `ledger`. Returns false without side effects when the agent
/// is out of budget or the view cannot supply alpha.
bool agent_step(AgentRuntime& rt, CoverageLedger& ledger, int row,
                const std::vector<Eigen::Vector2d>& positions, double alpha);

/// Pairwise knowledge exchange between agents whose outputs are within
/// r_comm, in ascending (r, s) order, repeated until no ledger changes.
/// Returns the number of merges performed.
int sharing_pass(std::vector<AgentRuntime>& agents, double r_comm, SharingMethod method);

struct SimResult {
  double alpha = 0.0;
  SamplePointCloud cloud;
  std::vector<std::vector<Eigen::VectorXd>> trajectories;  // per agent, x^0..x^K
  std::vector<std::vector<Eigen::Vector2d>> outputs;       // per agent, y^0..y^K
  std::vector<std::vector<TransportPlan>> plans;           // per agent, per step
  std::vector<Eigen::VectorXd> remaining_series;  // per step k=0..K, per-agent sum(beta)
  std::vector<CoverageLedger> final_ledgers;
  int exchanges = 0;
  std::string termination;  // mass-exhausted | step-budget | mixed
  double wall_time_s = 0.0;

  int num_agents() const { return static_cast<int>(trajectories.size()); }
};

/// Throws ValidationError on malformed scenarios (checked up front).
void validate_scenario(const Scenario& scenario);

/// Full coverage run: sample the cloud, initialize agents, loop stages A and
/// B for every active agent then the sharing stage, until every agent stops.
/// Decentralized methods give each agent its own ledger; the centralized
/// method keeps one shared ledger that agents read and write in index order
/// within a step. Deterministic for a fixed scenario and seed.
SimResult run_scenario(const Scenario& scenario);

}  // namespace denscov
