#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <variant>

namespace denscov {

/// Discrete-time linear model x' = A x + B u with output y = C x.
struct LtiModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }
};

/// Control-affine model x' = f(x) + g(x) u with output y = C x.
struct NonlinearModel {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> g;
  Eigen::MatrixXd C;
  int n_ = 0;
  int m_ = 0;

  int n() const { return n_; }
  int m() const { return m_; }
  int p() const { return static_cast<int>(C.rows()); }
};

struct SingleIntegratorParams {
  double dt = 0.1;
};

/// Planar quadrotor linearized about hover, per-axis state
/// (pos, vel, tilt, tilt rate); full state stacks the x and y axes.
struct PlanarQuadrotorParams {
  double gravity = 9.81;
  double inertia_x = 0.0075;
  double inertia_y = 0.0075;
  double dt = 0.1;
};

struct UnicycleParams {
  double dt = 0.1;
};

using ModelKind = std::variant<SingleIntegratorParams, PlanarQuadrotorParams, UnicycleParams>;
using AnyModel = std::variant<LtiModel, NonlinearModel>;

/// Builds the model for a kind tag. Single integrator and planar quadrotor are
/// LTI; the unicycle is control-affine.
AnyModel build_model(const ModelKind& kind);

LtiModel build_single_integrator(const SingleIntegratorParams& params);
LtiModel build_planar_quadrotor(const PlanarQuadrotorParams& params);
NonlinearModel build_unicycle(const UnicycleParams& params);

/// Throws ValidationError on dimension mismatches or non-finite entries.
void validate_model(const LtiModel& model);

Eigen::VectorXd step_lti(const LtiModel& model, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u);
Eigen::VectorXd step_nonlinear(const NonlinearModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u);

Eigen::VectorXd step_model(const AnyModel& model, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u);

int model_state_dim(const AnyModel& model);
int model_input_dim(const AnyModel& model);

/// Output y = C x for either model variant.
Eigen::Vector2d model_output(const AnyModel& model, const Eigen::VectorXd& x);

}  // namespace denscov
