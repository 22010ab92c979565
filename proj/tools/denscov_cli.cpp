#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "denscov/errors.hpp"
#include "denscov/metrics.hpp"
#include "denscov/scenario.hpp"
#include "denscov/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  int exact_limit = denscov::kExactTransportLimit;
  std::string run_dir;
  std::string cloud_path;
  std::string batch_path;
};

void apply_overrides(denscov::ConfigFile& cfg, const Options& opt) {
  if (opt.seed) cfg.scenario.seed = *opt.seed;
  if (opt.method) cfg.scenario.method = denscov::sharing_method_from_string(*opt.method);
}

void print_warnings(const denscov::ConfigFile& cfg) {
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_sample(const Options& opt) {
  denscov::ConfigFile cfg = denscov::load_config(opt.config);
  apply_overrides(cfg, opt);
  print_warnings(cfg);
  const auto cloud = denscov::sample_points(cfg.scenario.density, cfg.scenario.domain,
                                            cfg.scenario.num_samples, cfg.scenario.seed);
  const std::string out = opt.out.empty() ? "cloud.csv" : opt.out;
  denscov::save_point_cloud(cloud, out);
  std::printf("sampled n=%d seed=%llu -> %s\n", cloud.size(),
              static_cast<unsigned long long>(cfg.scenario.seed), out.c_str());
  return 0;
}

int cmd_run(const Options& opt) {
  denscov::ConfigFile cfg = denscov::load_config(opt.config);
  apply_overrides(cfg, opt);
  print_warnings(cfg);
  denscov::validate_scenario(cfg.scenario);
  const denscov::SimResult result = denscov::run_scenario(cfg.scenario);
  const std::string dir = opt.out.empty() ? cfg.output.dir : opt.out;
  denscov::write_run_outputs(cfg, result, dir);
  long long steps = 0;
  for (const auto& plans : result.plans) steps += static_cast<long long>(plans.size());
  std::printf("run complete: %d agents, %lld steps, termination=%s, wall=%.3fs -> %s\n",
              result.num_agents(), steps, result.termination.c_str(), result.wall_time_s,
              dir.c_str());
  return 0;
}

int cmd_metrics(const Options& opt) {
  denscov::SimResult result = denscov::load_run_outputs(opt.run_dir);
  if (!opt.cloud_path.empty()) result.cloud = denscov::load_point_cloud(opt.cloud_path);
  const denscov::MetricsReport report = denscov::build_metrics(result, opt.exact_limit);
  const std::string out =
      opt.out.empty() ? (fs::path(opt.run_dir) / "metrics.json").string() : opt.out;
  denscov::write_metrics_json(report, out);
  std::printf("w2=%.17g (%s) redundancy=%.17g%% -> %s\n", report.w2, report.w2_method.c_str(),
              report.work_redundancy, out.c_str());

  if (!opt.batch_path.empty()) {
    std::ifstream manifest_in(fs::path(opt.run_dir) / "manifest.json");
    if (!manifest_in) throw denscov::ValidationError("metrics: missing manifest.json");
    const json manifest = json::parse(manifest_in);
    long long terminal = 0;
    for (const auto& s : manifest.at("nominal_steps")) {
      terminal = std::max<long long>(terminal, s.get<long long>());
    }
    const bool fresh = !fs::exists(opt.batch_path);
    std::ofstream batch(opt.batch_path, std::ios::app);
    if (!batch) throw denscov::ValidationError("metrics: cannot open batch file");
    if (fresh) batch << "scenario_id,seed,method,terminal_steps,w2,redundancy,wall_time_s\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%llu,%s,%lld,%.17g,%.17g,%.17g\n",
                  manifest.at("config_hash").get<std::string>().c_str(),
                  static_cast<unsigned long long>(manifest.at("seed").get<std::uint64_t>()),
                  manifest.at("method").get<std::string>().c_str(), terminal, report.w2,
                  report.work_redundancy, report.wall_time_s);
    batch << line;
  }
  return 0;
}

int cmd_validate(const Options& opt) {
  denscov::ConfigFile cfg = denscov::load_config(opt.config);
  apply_overrides(cfg, opt);
  print_warnings(cfg);
  denscov::validate_density(cfg.scenario.density, cfg.scenario.domain);
  if (cfg.scenario.agents.empty()) {
    std::printf("OK (sampling-only config): n=%d seed=%llu\n", cfg.scenario.num_samples,
                static_cast<unsigned long long>(cfg.scenario.seed));
    return 0;
  }
  denscov::validate_scenario(cfg.scenario);
  const double alpha = denscov::uniform_alpha(cfg.scenario.agents);
  std::printf("OK: %zu agents, n=%d, alpha=%.17g, method=%s, r_comm=%.17g\n",
              cfg.scenario.agents.size(), cfg.scenario.num_samples, alpha,
              denscov::to_string(cfg.scenario.method).c_str(), cfg.scenario.r_comm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent non-uniform coverage: sampling, runs and metrics"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) {
      sub->add_option("--config", opt.config, "Scenario config (JSON)")->required();
      sub->add_option("--seed", opt.seed, "Override sampling/init seed");
    }
  };

  CLI::App* sample = app.add_subcommand("sample", "Draw the reference point cloud");
  add_common(sample, true);
  sample->add_option("--out", opt.out, "Output CSV path (default cloud.csv)");

  CLI::App* run = app.add_subcommand("run", "Run a coverage scenario");
  add_common(run, true);
  run->add_option("--out", opt.out, "Output directory (default from config)");
  run->add_option("--method", opt.method, "Override sharing method")
      ->check(CLI::IsMember({"original", "proposed", "centralized"}));

  CLI::App* metrics = app.add_subcommand("metrics", "Compute metrics for a finished run");
  metrics->add_option("--run", opt.run_dir, "Run output directory")->required();
  metrics->add_option("--cloud", opt.cloud_path, "Reference cloud CSV (default: run's own)");
  metrics->add_option("--exact-limit", opt.exact_limit,
                      "Largest per-side atom count for the exact W2 solver");
  metrics->add_option("--out", opt.out, "Metrics JSON path (default <run>/metrics.json)");
  metrics->add_option("--batch", opt.batch_path, "Append a summary row to this CSV");

  CLI::App* validate = app.add_subcommand("validate", "Check a config without running");
  add_common(validate, true);
  validate->add_option("--method", opt.method, "Override sharing method")
      ->check(CLI::IsMember({"original", "proposed", "centralized"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sample->parsed()) return cmd_sample(opt);
    if (run->parsed()) return cmd_run(opt);
    if (metrics->parsed()) return cmd_metrics(opt);
    if (validate->parsed()) return cmd_validate(opt);
  } catch (const denscov::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const denscov::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
