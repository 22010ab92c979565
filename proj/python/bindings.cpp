#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "denscov/controller.hpp"
#include "denscov/density.hpp"
#include "denscov/dynamics.hpp"
#include "denscov/errors.hpp"
#include "denscov/metrics.hpp"
#include "denscov/scenario.hpp"
#include "denscov/sim.hpp"
#include "denscov/transport.hpp"

namespace py = pybind11;

namespace {

denscov::Bounds bounds_from(const std::array<double, 4>& b) {
  return denscov::Bounds{b[0], b[1], b[2], b[3]};
}

std::vector<Eigen::Vector2d> points_from(const Eigen::MatrixXd& m) {
  if (m.cols() != 2) throw denscov::ValidationError("points: expected an Nx2 array");
  std::vector<Eigen::Vector2d> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m.row(i).transpose();
  return out;
}

Eigen::MatrixXd points_to(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pts[i];
  return out;
}

denscov::ModelKind kind_from(const std::string& model, double dt, double gravity,
                             double inertia_x, double inertia_y) {
  if (model == "single_integrator") return denscov::SingleIntegratorParams{dt};
  if (model == "planar_quadrotor") {
    return denscov::PlanarQuadrotorParams{gravity, inertia_x, inertia_y, dt};
  }
  if (model == "unicycle") return denscov::UnicycleParams{dt};
  throw denscov::ValidationError("model: expected single_integrator|planar_quadrotor|unicycle");
}

denscov::ControllerConfig controller_from(const Eigen::VectorXd& q_diag,
                                          const Eigen::VectorXd& r_diag, int horizon,
                                          std::optional<double> u_max) {
  denscov::ControllerConfig cfg;
  cfg.Q = Eigen::MatrixXd(q_diag.asDiagonal());
  cfg.R = Eigen::MatrixXd(r_diag.asDiagonal());
  cfg.horizon = horizon;
  cfg.u_max = u_max;
  return cfg;
}

denscov::LocalSelection selection_from(const Eigen::MatrixXd& q_points,
                                       const Eigen::VectorXd& gammas) {
  if (q_points.rows() != gammas.size()) {
    throw denscov::ValidationError("selection: q_points and gammas size mismatch");
  }
  denscov::LocalSelection sel;
  Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
  for (Eigen::Index k = 0; k < gammas.size(); ++k) {
    sel.indices.push_back(static_cast<int>(k));
    sel.gamma_sum += gammas[k];
    weighted += gammas[k] * q_points.row(k).transpose();
  }
  sel.gammas = gammas;
  sel.centroid = weighted / sel.gamma_sum;
  return sel;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-agent non-uniform coverage core";

  py::register_exception<denscov::ValidationError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<denscov::NumericalError>(m, "SolveError", PyExc_RuntimeError);

  m.def(
      "evaluate_density",
      [](const std::string& density, const std::array<double, 4>& domain, double x, double y) {
        const auto spec = denscov::parse_density_json(density);
        return denscov::evaluate_density(spec, bounds_from(domain), {x, y});
      },
      py::arg("density"), py::arg("domain"), py::arg("x"), py::arg("y"),
      "Density value at (x, y); density is the JSON density section, domain is "
      "(xmin, xmax, ymin, ymax).");

  m.def(
      "sample_points",
      [](const std::string& density, const std::array<double, 4>& domain, int n,
         std::uint64_t seed) {
        const auto spec = denscov::parse_density_json(density);
        const auto cloud = denscov::sample_points(spec, bounds_from(domain), n, seed);
        return py::make_tuple(points_to(cloud.positions), cloud.weights);
      },
      py::arg("density"), py::arg("domain"), py::arg("n"), py::arg("seed"),
      "Rejection-sample n points; returns (positions Nx2, weights N).");

  m.def(
      "grid_from_density",
      [](const std::string& density, const std::array<double, 4>& domain, int rows, int cols) {
        const auto spec = denscov::parse_density_json(density);
        const auto grid = denscov::grid_from_density(spec, bounds_from(domain), rows, cols);
        Eigen::MatrixXd out(rows, cols);
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) out(r, c) = grid.at(r, c);
        }
        return out;
      },
      py::arg("density"), py::arg("domain"), py::arg("rows"), py::arg("cols"));

  m.def(
      "model_matrices",
      [](const std::string& model, double dt, double gravity, double inertia_x,
         double inertia_y) {
        const auto any = denscov::build_model(kind_from(model, dt, gravity, inertia_x,
                                                        inertia_y));
        if (const auto* lti = std::get_if<denscov::LtiModel>(&any)) {
          return py::make_tuple(lti->A, lti->B, lti->C);
        }
        throw denscov::ValidationError("model_matrices: " + model + " is not linear");
      },
      py::arg("model"), py::arg("dt") = 0.1, py::arg("gravity") = 9.81,
      py::arg("inertia_x") = 0.0075, py::arg("inertia_y") = 0.0075,
      "A, B, C of a linear model kind.");

  m.def(
      "step",
      [](const std::string& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt,
         double gravity, double inertia_x, double inertia_y) {
        const auto any = denscov::build_model(kind_from(model, dt, gravity, inertia_x,
                                                        inertia_y));
        return denscov::step_model(any, x, u);
      },
      py::arg("model"), py::arg("x"), py::arg("u"), py::arg("dt") = 0.1,
      py::arg("gravity") = 9.81, py::arg("inertia_x") = 0.0075, py::arg("inertia_y") = 0.0075);

  m.def(
      "select_local_samples",
      [](const Eigen::Vector2d& y, const Eigen::VectorXd& beta, const Eigen::MatrixXd& positions,
         double alpha) {
        const auto sel = denscov::select_local_samples(y, beta, points_from(positions), alpha);
        return py::make_tuple(sel.indices, sel.gammas, sel.centroid);
      },
      py::arg("y"), py::arg("beta"), py::arg("positions"), py::arg("alpha"),
      "Weight-normalized nearest-sample selection; returns (indices, gammas, centroid).");

  m.def(
      "weight_update_plan",
      [](const Eigen::Vector2d& y, const Eigen::VectorXd& beta, const Eigen::MatrixXd& positions,
         double alpha) {
        const auto plan = denscov::weight_update_plan(y, beta, points_from(positions), alpha);
        std::vector<int> idx;
        std::vector<double> gamma;
        for (const auto& [j, g] : plan.entries) {
          idx.push_back(j);
          gamma.push_back(g);
        }
        return py::make_tuple(idx, gamma);
      },
      py::arg("y"), py::arg("beta"), py::arg("positions"), py::arg("alpha"),
      "Optimal single-sink transport of mass alpha onto y; returns (indices, gammas).");

  m.def(
      "lti_control",
      [](const std::string& model, const Eigen::VectorXd& x, const Eigen::MatrixXd& q_points,
         const Eigen::VectorXd& gammas, const Eigen::VectorXd& q_diag,
         const Eigen::VectorXd& r_diag, int horizon, std::optional<double> u_max, double dt,
         double gravity, double inertia_x, double inertia_y) {
        const auto any = denscov::build_model(kind_from(model, dt, gravity, inertia_x,
                                                        inertia_y));
        const auto* lti = std::get_if<denscov::LtiModel>(&any);
        if (!lti) throw denscov::ValidationError("lti_control: model is not linear");
        const auto cfg = controller_from(q_diag, r_diag, horizon, u_max);
        const auto sel = selection_from(q_points, gammas);
        return denscov::optimal_control_lti(*lti, cfg, sel, x).u;
      },
      py::arg("model"), py::arg("x"), py::arg("q_points"), py::arg("gammas"), py::arg("q_diag"),
      py::arg("r_diag"), py::arg("horizon") = 15, py::arg("u_max") = std::nullopt,
      py::arg("dt") = 0.1, py::arg("gravity") = 9.81, py::arg("inertia_x") = 0.0075,
      py::arg("inertia_y") = 0.0075,
      "First input of the finite-horizon optimal control toward weighted points.");

  m.def(
      "unicycle_control",
      [](const Eigen::VectorXd& x, const Eigen::MatrixXd& q_points, const Eigen::VectorXd& gammas,
         const Eigen::VectorXd& q_diag, const Eigen::VectorXd& r_diag,
         std::optional<double> u_max, double dt) {
        const auto model = denscov::build_unicycle(denscov::UnicycleParams{dt});
        const auto cfg = controller_from(q_diag, r_diag, 1, u_max);
        const auto sel = selection_from(q_points, gammas);
        return denscov::optimal_control_nonlinear(model, cfg, sel, x).u;
      },
      py::arg("x"), py::arg("q_points"), py::arg("gammas"), py::arg("q_diag"), py::arg("r_diag"),
      py::arg("u_max") = std::nullopt, py::arg("dt") = 0.1,
      "Single-step control-affine law for the unicycle.");

  m.def(
      "wasserstein2_exact",
      [](const Eigen::MatrixXd& pos_a, const Eigen::VectorXd& w_a, const Eigen::MatrixXd& pos_b,
         const Eigen::VectorXd& w_b) {
        denscov::DiscreteDistribution a{points_from(pos_a), w_a};
        denscov::DiscreteDistribution b{points_from(pos_b), w_b};
        return denscov::wasserstein2_exact(a, b);
      },
      py::arg("pos_a"), py::arg("w_a"), py::arg("pos_b"), py::arg("w_b"));

  m.def(
      "wasserstein2_sinkhorn",
      [](const Eigen::MatrixXd& pos_a, const Eigen::VectorXd& w_a, const Eigen::MatrixXd& pos_b,
         const Eigen::VectorXd& w_b, double epsilon, int max_iters, double tol) {
        denscov::DiscreteDistribution a{points_from(pos_a), w_a};
        denscov::DiscreteDistribution b{points_from(pos_b), w_b};
        const auto res = denscov::wasserstein2_sinkhorn(a, b, epsilon, max_iters, tol);
        py::dict out;
        out["distance"] = res.distance;
        out["iterations"] = res.iterations;
        out["marginal_violation"] = res.marginal_violation;
        out["converged"] = res.converged;
        out["epsilon"] = res.epsilon;
        return out;
      },
      py::arg("pos_a"), py::arg("w_a"), py::arg("pos_b"), py::arg("w_b"), py::arg("epsilon"),
      py::arg("max_iters") = 20000, py::arg("tol") = 1e-6);

  m.def(
      "run_scenario",
      [](const std::string& config_json, std::optional<int> w2_exact_limit) {
        const denscov::ConfigFile cfg = denscov::parse_config(config_json);
        denscov::validate_scenario(cfg.scenario);
        const denscov::SimResult result = denscov::run_scenario(cfg.scenario);

        py::dict out;
        out["alpha"] = result.alpha;
        out["termination"] = result.termination;
        out["exchanges"] = result.exchanges;
        out["wall_time_s"] = result.wall_time_s;
        out["cloud_positions"] = points_to(result.cloud.positions);
        out["cloud_weights"] = result.cloud.weights;
        py::list trajectories, outputs;
        for (int r = 0; r < result.num_agents(); ++r) {
          const auto& traj = result.trajectories[r];
          Eigen::MatrixXd t(static_cast<Eigen::Index>(traj.size()), traj.front().size());
          for (std::size_t k = 0; k < traj.size(); ++k) {
            t.row(static_cast<Eigen::Index>(k)) = traj[k].transpose();
          }
          trajectories.append(t);
          outputs.append(points_to(result.outputs[r]));
        }
        out["trajectories"] = trajectories;
        out["outputs"] = outputs;
        Eigen::MatrixXd remaining(static_cast<Eigen::Index>(result.remaining_series.size()),
                                  result.num_agents());
        for (std::size_t k = 0; k < result.remaining_series.size(); ++k) {
          remaining.row(static_cast<Eigen::Index>(k)) = result.remaining_series[k].transpose();
        }
        out["remaining"] = remaining;
        out["work_redundancy"] = denscov::work_redundancy(result);
        if (w2_exact_limit) {
          out["w2"] = denscov::coverage_wasserstein(result, result.cloud, *w2_exact_limit);
        }
        return out;
      },
      py::arg("config_json"), py::arg("w2_exact_limit") = std::nullopt,
      "Run a scenario from a JSON config string; returns run data as a dict. "
      "Pass w2_exact_limit to also compute the coverage W2 metric.");

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
