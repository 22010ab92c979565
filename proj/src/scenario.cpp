#include "denscov/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "denscov/errors.hpp"
#include "fmt17.hpp"

namespace denscov {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& need(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "/" + key + ": missing");
  return *it;
}

double need_number(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number()) throw ValidationError(path + "/" + key + ": expected a number");
  return v.get<double>();
}

double opt_number(const json& j, const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return j.at(key).get<double>();
}

int need_int(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number_integer()) throw ValidationError(path + "/" + key + ": expected an integer");
  return v.get<int>();
}

std::string need_string(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_string()) throw ValidationError(path + "/" + key + ": expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd parse_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path + ": expected an array of numbers");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ValidationError(path + "[" + std::to_string(i) + "]: expected a number");
    }
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

DensitySpec parse_density(const json& j, const std::string& base_dir) {
  DensitySpec spec;
  const std::string kind = need_string(j, "kind", "/density");
  if (kind == "gaussian_mixture") {
    spec.kind = DensityKind::GaussianMixture;
    const json& comps = need(j, "components", "/density");
    if (!comps.is_array() || comps.empty()) {
      throw ValidationError("/density/components: expected a non-empty array");
    }
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string path = "/density/components[" + std::to_string(i) + "]";
      const json& c = comps[i];
      GaussianComponent g;
      const Eigen::VectorXd mean = parse_vector(need(c, "mean", path), path + "/mean");
      if (mean.size() != 2) throw ValidationError(path + "/mean: expected 2 entries");
      g.mean = mean;
      const json& cov = need(c, "cov", path);
      if (!cov.is_array() || cov.size() != 2) {
        throw ValidationError(path + "/cov: expected a 2x2 matrix");
      }
      for (int r = 0; r < 2; ++r) {
        const Eigen::VectorXd row = parse_vector(cov[r], path + "/cov[" + std::to_string(r) + "]");
        if (row.size() != 2) throw ValidationError(path + "/cov: expected a 2x2 matrix");
        g.cov.row(r) = row;
      }
      g.weight = opt_number(c, "weight", 1.0);
      spec.components.push_back(g);
    }
  } else if (kind == "grid") {
    spec.kind = DensityKind::Grid;
    if (j.contains("path")) {
      fs::path p = need_string(j, "path", "/density");
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      spec.grid = load_density_grid(p.string());
    } else {
      const std::string path = "/density/grid";
      const json& g = need(j, "grid", "/density");
      spec.grid.rows = need_int(g, "rows", path);
      spec.grid.cols = need_int(g, "cols", path);
      spec.grid.bounds.xmin = need_number(g, "xmin", path);
      spec.grid.bounds.xmax = need_number(g, "xmax", path);
      spec.grid.bounds.ymin = need_number(g, "ymin", path);
      spec.grid.bounds.ymax = need_number(g, "ymax", path);
      const Eigen::VectorXd values = parse_vector(need(g, "values", path), path + "/values");
      spec.grid.values.assign(values.data(), values.data() + values.size());
    }
  } else {
    throw ValidationError("/density/kind: expected gaussian_mixture|grid, got '" + kind + "'");
  }
  return spec;
}

ModelKind parse_model_kind(const std::string& name, const json& params, double default_dt,
                           const std::string& path) {
  const double dt = opt_number(params, "dt", default_dt);
  if (name == "single_integrator") {
    return SingleIntegratorParams{dt};
  }
  if (name == "planar_quadrotor") {
    PlanarQuadrotorParams p;
    p.gravity = opt_number(params, "gravity", 9.81);
    p.inertia_x = opt_number(params, "inertia_x", 0.0075);
    p.inertia_y = opt_number(params, "inertia_y", 0.0075);
    p.dt = dt;
    return p;
  }
  if (name == "unicycle") {
    return UnicycleParams{dt};
  }
  throw ValidationError(path + "/model: expected single_integrator|planar_quadrotor|unicycle, "
                        "got '" + name + "'");
}

Eigen::MatrixXd penalty_matrix(const json& penalties, const std::string& key, int dim,
                               const Eigen::MatrixXd& fallback, const std::string& path) {
  if (!penalties.is_object() || !penalties.contains(key)) return fallback;
  const Eigen::VectorXd diag = parse_vector(penalties.at(key), path + "/" + key);
  if (diag.size() != dim) {
    throw ValidationError(path + "/" + key + ": expected " + std::to_string(dim) +
                          " entries for this model");
  }
  return diag.asDiagonal();
}

double kind_dt(const ModelKind& kind) {
  return std::visit([](const auto& p) { return p.dt; }, kind);
}

}  // namespace

ConfigFile parse_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return [&] {
    ConfigFile cfg;
    cfg.raw = json_text;

    const json& dom = need(j, "domain", "");
    cfg.scenario.domain.xmin = need_number(dom, "xmin", "/domain");
    cfg.scenario.domain.xmax = need_number(dom, "xmax", "/domain");
    cfg.scenario.domain.ymin = need_number(dom, "ymin", "/domain");
    cfg.scenario.domain.ymax = need_number(dom, "ymax", "/domain");

    cfg.scenario.density = parse_density(need(j, "density", ""), base_dir);

    const json& sampling = need(j, "sampling", "");
    cfg.scenario.num_samples = need_int(sampling, "n", "/sampling");
    const json& seed = need(sampling, "seed", "/sampling");
    if (!seed.is_number_integer()) throw ValidationError("/sampling/seed: expected an integer");
    cfg.scenario.seed = seed.get<std::uint64_t>();

    const double dt = opt_number(j, "dt", 0.1);
    const int horizon = j.contains("horizon") ? need_int(j, "horizon", "") : 15;
    const json penalties = j.value("penalties", json::object());
    const json empty = json::object();

    if (j.contains("comm")) {
      const json& comm = j.at("comm");
      cfg.scenario.method = sharing_method_from_string(
          comm.contains("method") ? need_string(comm, "method", "/comm") : "proposed");
      cfg.scenario.r_comm = opt_number(comm, "r_comm", 0.0);
    }

    if (j.contains("agents")) {
      const json& agents = j.at("agents");
      if (!agents.is_array()) throw ValidationError("/agents: expected an array");
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const std::string path = "/agents[" + std::to_string(i) + "]";
        const json& a = agents[i];
        AgentSpec spec;
        const std::string model_name = need_string(a, "model", path);
        spec.kind = parse_model_kind(model_name, a.value("params", empty), dt, path);
        const AnyModel model = build_model(spec.kind);
        const int n = model_state_dim(model);
        const int m = model_input_dim(model);

        // An agent override wins; the global diagonal only needs to match the
        // models that actually fall back to it (lengths differ across kinds).
        const json agent_pen = a.value("penalties", empty);
        auto pick = [&](const char* key, int dim, const Eigen::MatrixXd& fallback) {
          if (agent_pen.is_object() && agent_pen.contains(key)) {
            return penalty_matrix(agent_pen, key, dim, fallback, path + "/penalties");
          }
          return penalty_matrix(penalties, key, dim, fallback, "/penalties");
        };
        spec.controller.Q = pick("q_diag", n, Eigen::MatrixXd::Zero(n, n));
        spec.controller.R = pick("r_diag", m, Eigen::MatrixXd::Identity(m, m));
        spec.controller.horizon = a.contains("horizon") ? need_int(a, "horizon", path) : horizon;
        if (a.contains("u_max")) {
          spec.controller.u_max = need_number(a, "u_max", path);
        } else if (j.contains("u_max")) {
          spec.controller.u_max = need_number(j, "u_max", "");
        }
        if (std::holds_alternative<UnicycleParams>(spec.kind) && spec.controller.horizon > 1) {
          cfg.warnings.push_back(path + ": horizon " + std::to_string(spec.controller.horizon) +
                                 " ignored for unicycle model (single-step control law)");
        }

        spec.steps = need_int(a, "steps", path);
        spec.max_steps = a.contains("max_steps") ? need_int(a, "max_steps", path) : 0;
        if (a.contains("x0") && !(a.at("x0").is_string() && a.at("x0") == "random")) {
          spec.x0 = parse_vector(a.at("x0"), path + "/x0");
        }

        int count = a.contains("count") ? need_int(a, "count", path) : 1;
        if (count < 1) throw ValidationError(path + "/count: must be >= 1");
        for (int c = 0; c < count; ++c) cfg.scenario.agents.push_back(spec);
      }
    }

    if (j.contains("output")) {
      const json& out = j.at("output");
      cfg.output.dir = out.value("dir", std::string("out"));
      if (out.contains("what")) {
        const json& what = out.at("what");
        if (!what.is_array()) throw ValidationError("/output/what: expected an array");
        cfg.output.trajectories = cfg.output.ledger = cfg.output.plans = cfg.output.cloud = false;
        for (const auto& w : what) {
          const std::string s = w.get<std::string>();
          if (s == "trajectories") cfg.output.trajectories = true;
          else if (s == "ledger") cfg.output.ledger = true;
          else if (s == "plans") cfg.output.plans = true;
          else if (s == "cloud") cfg.output.cloud = true;
          else throw ValidationError("/output/what: unknown artifact '" + s + "'");
        }
      }
    }
    return cfg;
  }();
}

DensitySpec parse_density_json(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("density: ") + e.what());
  }
  return parse_density(j, base_dir);
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string());
}

std::string config_hash(const std::string& raw) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : raw) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> write_run_outputs(const ConfigFile& config, const SimResult& result,
                                           const std::string& dir) {
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ValidationError("write_run_outputs: cannot open " + name + " in " + dir);
    files.push_back(name);
    return out;
  };

  if (config.output.cloud) {
    save_point_cloud(result.cloud, (fs::path(dir) / "cloud.csv").string());
    files.push_back("cloud.csv");
  }

  const int L = result.num_agents();
  if (config.output.trajectories) {
    for (int r = 0; r < L; ++r) {
      auto out = open("traj_agent_" + std::to_string(r) + ".csv");
      const double dt = kind_dt(config.scenario.agents[r].kind);
      const int n = static_cast<int>(result.trajectories[r].front().size());
      out << "k,t";
      for (int i = 0; i < n; ++i) out << ",x" << i;
      out << ",px,py\n";
      for (std::size_t k = 0; k < result.trajectories[r].size(); ++k) {
        out << k << ',' << fmt17(static_cast<double>(k) * dt);
        for (int i = 0; i < n; ++i) out << ',' << fmt17(result.trajectories[r][k][i]);
        out << ',' << fmt17(result.outputs[r][k].x()) << ',' << fmt17(result.outputs[r][k].y())
            << '\n';
      }
    }
  }

  if (config.output.ledger) {
    auto out = open("remaining.csv");
    out << "k,agent,remaining\n";
    for (std::size_t k = 0; k < result.remaining_series.size(); ++k) {
      for (int r = 0; r < L; ++r) {
        out << k << ',' << r << ',' << fmt17(result.remaining_series[k][r]) << '\n';
      }
    }
    auto snap = open("ledger_final.csv");
    snap << "agent,row_agent,sample_index,gamma\n";
    for (int r = 0; r < L; ++r) {
      const auto& ledger = result.final_ledgers[r];
      for (int l = 0; l < ledger.agents(); ++l) {
        for (int s = 0; s < ledger.points(); ++s) {
          if (ledger.gamma(l, s) != 0.0) {
            snap << r << ',' << l << ',' << s << ',' << fmt17(ledger.gamma(l, s)) << '\n';
          }
        }
      }
    }
    auto beta = open("beta_final.csv");
    beta << "agent,sample_index,beta\n";
    for (int r = 0; r < L; ++r) {
      const auto& ledger = result.final_ledgers[r];
      for (int s = 0; s < ledger.points(); ++s) {
        beta << r << ',' << s << ',' << fmt17(ledger.beta[s]) << '\n';
      }
    }
  }

  if (config.output.plans) {
    auto out = open("plans.csv");
    out << "agent,step,px,py,sample_index,gamma\n";
    for (int r = 0; r < L; ++r) {
      for (std::size_t k = 0; k < result.plans[r].size(); ++k) {
        const auto& plan = result.plans[r][k];
        for (const auto& [jdx, g] : plan.entries) {
          out << r << ',' << k << ',' << fmt17(plan.target.x()) << ',' << fmt17(plan.target.y())
              << ',' << jdx << ',' << fmt17(g) << '\n';
        }
      }
    }
  }

  json manifest;
  manifest["format"] = 1;
  manifest["config_hash"] = config_hash(config.raw);
  manifest["seed"] = config.scenario.seed;
  manifest["alpha"] = result.alpha;
  manifest["num_samples"] = config.scenario.num_samples;
  manifest["num_agents"] = L;
  manifest["method"] = to_string(config.scenario.method);
  manifest["r_comm"] = config.scenario.r_comm;
  manifest["termination"] = result.termination;
  manifest["exchanges"] = result.exchanges;
  manifest["wall_time_s"] = result.wall_time_s;
  manifest["wall_time_note"] = "compute only; file output excluded";
  json steps = json::array(), nominal = json::array();
  for (int r = 0; r < L; ++r) {
    steps.push_back(result.plans[r].size());
    nominal.push_back(config.scenario.agents[r].steps);
  }
  manifest["steps_taken"] = steps;
  manifest["nominal_steps"] = nominal;
  manifest["files"] = files;
  {
    auto out = open("manifest.json");
    out << manifest.dump(2) << '\n';
  }
  return files;
}

void write_metrics_json(const MetricsReport& report, const std::string& path) {
  json j;
  j["w2"] = report.w2;
  j["w2_method"] = report.w2_method;
  if (report.w2_method == "sinkhorn") {
    j["w2_epsilon"] = report.w2_epsilon;
    j["w2_iterations"] = report.w2_iterations;
    j["w2_marginal_violation"] = report.w2_marginal_violation;
  }
  j["avg_remaining"] = report.avg_remaining;
  j["work_redundancy"] = report.work_redundancy;
  j["wall_time_s"] = report.wall_time_s;
  std::ofstream out(path);
  if (!out) throw ValidationError("write_metrics_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

SimResult load_run_outputs(const std::string& dir) {
  const fs::path base(dir);
  std::ifstream min(base / "manifest.json");
  if (!min) throw ValidationError("load_run_outputs: missing manifest.json in " + dir);
  json manifest;
  try {
    manifest = json::parse(min);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("load_run_outputs: manifest: ") + e.what());
  }

  SimResult result;
  result.alpha = manifest.at("alpha").get<double>();
  result.termination = manifest.value("termination", "");
  result.wall_time_s = manifest.value("wall_time_s", 0.0);
  result.exchanges = manifest.value("exchanges", 0);
  const int L = manifest.at("num_agents").get<int>();

  result.cloud = load_point_cloud((base / "cloud.csv").string());

  std::ifstream plans(base / "plans.csv");
  if (!plans) throw ValidationError("load_run_outputs: missing plans.csv in " + dir);
  std::string line;
  std::getline(plans, line);
  if (line.rfind("agent,step,px,py,sample_index,gamma", 0) != 0) {
    throw ValidationError("load_run_outputs: unexpected plans.csv header");
  }
  result.plans.assign(L, {});
  while (std::getline(plans, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int agent, step, sample;
    double px, py, gamma;
    char c;
    if (!(ss >> agent >> c >> step >> c >> px >> c >> py >> c >> sample >> c >> gamma)) {
      throw ValidationError("load_run_outputs: bad plans.csv row: " + line);
    }
    auto& agent_plans = result.plans.at(agent);
    if (static_cast<int>(agent_plans.size()) <= step) {
      agent_plans.resize(step + 1);
      agent_plans[step].target = Eigen::Vector2d(px, py);
      agent_plans[step].alpha = result.alpha;
    }
    agent_plans[step].entries.emplace_back(sample, gamma);
  }

  std::ifstream rem(base / "remaining.csv");
  if (!rem) throw ValidationError("load_run_outputs: missing remaining.csv in " + dir);
  std::getline(rem, line);
  while (std::getline(rem, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int k, agent;
    double value;
    char c;
    if (!(ss >> k >> c >> agent >> c >> value)) {
      throw ValidationError("load_run_outputs: bad remaining.csv row: " + line);
    }
    if (static_cast<int>(result.remaining_series.size()) <= k) {
      result.remaining_series.resize(k + 1, Eigen::VectorXd::Zero(L));
    }
    result.remaining_series[k][agent] = value;
  }

  // Optional artifacts: trajectories and the final ledger snapshot.
  result.trajectories.assign(L, {});
  result.outputs.assign(L, {});
  for (int r = 0; r < L; ++r) {
    std::ifstream traj(base / ("traj_agent_" + std::to_string(r) + ".csv"));
    if (!traj) continue;
    std::getline(traj, line);
    const long n = std::count(line.begin(), line.end(), ',') - 3;  // k,t,...,px,py
    if (n < 1) throw ValidationError("load_run_outputs: unexpected trajectory header: " + line);
    while (std::getline(traj, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      long long k;
      double t;
      char c;
      if (!(ss >> k >> c >> t >> c)) {
        throw ValidationError("load_run_outputs: bad trajectory row: " + line);
      }
      Eigen::VectorXd state(n);
      for (long i = 0; i < n; ++i) {
        if (!(ss >> state[i] >> c)) {
          throw ValidationError("load_run_outputs: bad trajectory row: " + line);
        }
      }
      double px, py;
      if (!(ss >> px >> c >> py)) {
        throw ValidationError("load_run_outputs: bad trajectory row: " + line);
      }
      result.trajectories[r].push_back(state);
      result.outputs[r].emplace_back(px, py);
    }
  }

  std::ifstream beta(base / "beta_final.csv");
  if (beta) {
    const int N = manifest.at("num_samples").get<int>();
    const Eigen::VectorXd beta0 = Eigen::VectorXd::Constant(N, 1.0 / N);
    for (int r = 0; r < L; ++r) result.final_ledgers.push_back(make_ledger(r, L, beta0));
    std::getline(beta, line);
    while (std::getline(beta, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      int agent, sample;
      double value;
      char c;
      if (!(ss >> agent >> c >> sample >> c >> value)) {
        throw ValidationError("load_run_outputs: bad beta_final.csv row: " + line);
      }
      result.final_ledgers.at(agent).beta[sample] = value;
    }
    std::ifstream snap(base / "ledger_final.csv");
    if (snap) {
      std::getline(snap, line);
      while (std::getline(snap, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int agent, row, sample;
        double value;
        char c;
        if (!(ss >> agent >> c >> row >> c >> sample >> c >> value)) {
          throw ValidationError("load_run_outputs: bad ledger_final.csv row: " + line);
        }
        result.final_ledgers.at(agent).gamma(row, sample) = value;
      }
    }
  }
  return result;
}

}  // namespace denscov
