#include "denscov/dynamics.hpp"

#include "denscov/errors.hpp"

namespace denscov {

LtiModel build_single_integrator(const SingleIntegratorParams& params) {
  if (!(params.dt > 0.0)) throw ValidationError("single_integrator: dt must be positive");
  LtiModel m;
  m.A = Eigen::Matrix2d::Identity();
  m.B = Eigen::Matrix2d::Identity();
  m.C = Eigen::Matrix2d::Identity();
  return m;
}

LtiModel build_planar_quadrotor(const PlanarQuadrotorParams& params) {
  if (!(params.dt > 0.0)) throw ValidationError("planar_quadrotor: dt must be positive");
  if (!(params.inertia_x > 0.0) || !(params.inertia_y > 0.0)) {
    throw ValidationError("planar_quadrotor: inertias must be positive");
  }
  const double dt2 = params.dt * params.dt;
  // Per-axis state (pos, vel, tilt, tilt rate) in increment coordinates;
  // tilt couples into velocity through gravity, torque drives the tilt rate.
  auto axis = [&](double inertia) {
    Eigen::Matrix4d A;
    A << 1, 1, 0, 0,
         0, 1, params.gravity * dt2, 0,
         0, 0, 1, 1,
         0, 0, 0, 1;
    Eigen::Vector4d B(0, 0, 0, dt2 / inertia);
    return std::make_pair(A, B);
  };
  auto [Ax, Bx] = axis(params.inertia_x);
  auto [Ay, By] = axis(params.inertia_y);
  LtiModel m;
  m.A = Eigen::MatrixXd::Zero(8, 8);
  m.A.topLeftCorner(4, 4) = Ax;
  m.A.bottomRightCorner(4, 4) = Ay;
  m.B = Eigen::MatrixXd::Zero(8, 2);
  m.B.col(0).head(4) = Bx;
  m.B.col(1).tail(4) = By;
  m.C = Eigen::MatrixXd::Zero(2, 8);
  m.C(0, 0) = 1.0;
  m.C(1, 4) = 1.0;
  return m;
}

NonlinearModel build_unicycle(const UnicycleParams& params) {
  if (!(params.dt > 0.0)) throw ValidationError("unicycle: dt must be positive");
  NonlinearModel m;
  const double dt = params.dt;
  m.f = [](const Eigen::VectorXd& x) { return x; };
  m.g = [dt](const Eigen::VectorXd& x) {
    Eigen::MatrixXd g(3, 2);
    g << dt * std::cos(x[2]), 0.0,
         dt * std::sin(x[2]), 0.0,
         0.0, dt;
    return g;
  };
  m.C = Eigen::MatrixXd::Zero(2, 3);
  m.C(0, 0) = 1.0;
  m.C(1, 1) = 1.0;
  m.n_ = 3;
  m.m_ = 2;
  return m;
}

AnyModel build_model(const ModelKind& kind) {
  return std::visit(
      [](const auto& params) -> AnyModel {
        using P = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<P, SingleIntegratorParams>) {
          return build_single_integrator(params);
        } else if constexpr (std::is_same_v<P, PlanarQuadrotorParams>) {
          return build_planar_quadrotor(params);
        } else {
          return build_unicycle(params);
        }
      },
      kind);
}

void validate_model(const LtiModel& model) {
  if (model.A.rows() != model.A.cols()) throw ValidationError("model: A must be square");
  if (model.B.rows() != model.A.rows()) throw ValidationError("model: B row count must match A");
  if (model.C.cols() != model.A.rows()) throw ValidationError("model: C col count must match A");
  if (model.B.cols() < 1) throw ValidationError("model: B must have at least one column");
  if (!model.A.allFinite() || !model.B.allFinite() || !model.C.allFinite()) {
    throw ValidationError("model: matrices must be finite");
  }
}

Eigen::VectorXd step_lti(const LtiModel& model, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) {
  if (x.size() != model.n() || u.size() != model.m()) {
    throw ValidationError("step_lti: dimension mismatch");
  }
  return model.A * x + model.B * u;
}

Eigen::VectorXd step_nonlinear(const NonlinearModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) {
  if (x.size() != model.n() || u.size() != model.m()) {
    throw ValidationError("step_nonlinear: dimension mismatch");
  }
  return model.f(x) + model.g(x) * u;
}

Eigen::VectorXd step_model(const AnyModel& model, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) {
  if (const auto* lti = std::get_if<LtiModel>(&model)) return step_lti(*lti, x, u);
  return step_nonlinear(std::get<NonlinearModel>(model), x, u);
}

int model_state_dim(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.n(); }, model);
}

int model_input_dim(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.m(); }, model);
}

Eigen::Vector2d model_output(const AnyModel& model, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd& C =
      std::visit([](const auto& m) -> const Eigen::MatrixXd& { return m.C; }, model);
  return C * x;
}

}  // namespace denscov
