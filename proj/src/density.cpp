#include "denscov/density.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "denscov/errors.hpp"
#include "denscov/rng.hpp"
#include "fmt17.hpp"

namespace denscov {

namespace {

void validate_bounds(const Bounds& b) {
  if (!(b.xmin < b.xmax) || !(b.ymin < b.ymax)) {
    throw ValidationError("bounds: xmin < xmax and ymin < ymax required");
  }
  if (!std::isfinite(b.xmin) || !std::isfinite(b.xmax) || !std::isfinite(b.ymin) ||
      !std::isfinite(b.ymax)) {
    throw ValidationError("bounds: entries must be finite");
  }
}

// Peak value of one mixture component (attained at its mean).
double component_peak(const GaussianComponent& c) {
  const double det = c.cov.determinant();
  return c.weight / (2.0 * std::numbers::pi * std::sqrt(det));
}

}  // namespace

void validate_density(const DensitySpec& spec, const Bounds& domain) {
  validate_bounds(domain);
  if (spec.kind == DensityKind::GaussianMixture) {
    if (spec.components.empty()) {
      throw ValidationError("density.components: at least one component required");
    }
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
      const auto& c = spec.components[i];
      const std::string key = "density.components[" + std::to_string(i) + "]";
      if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
        throw ValidationError(key + ".weight: must be positive and finite");
      }
      if (!c.mean.allFinite() || !c.cov.allFinite()) {
        throw ValidationError(key + ": mean and cov must be finite");
      }
      const double asym = std::abs(c.cov(0, 1) - c.cov(1, 0));
      if (asym > 1e-9 * (1.0 + c.cov.cwiseAbs().maxCoeff())) {
        throw ValidationError(key + ".cov: must be symmetric");
      }
      if (!(c.cov(0, 0) > 0.0) || !(c.cov.determinant() > 0.0)) {
        throw ValidationError(key + ".cov: must be positive definite");
      }
    }
  } else {
    const auto& g = spec.grid;
    if (g.rows < 1 || g.cols < 1) {
      throw ValidationError("density.grid: rows and cols must be >= 1");
    }
    if (g.values.size() != static_cast<std::size_t>(g.rows) * g.cols) {
      throw ValidationError("density.grid.values: expected rows*cols entries");
    }
    validate_bounds(g.bounds);
    double total = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double v = g.values[i];
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("density.grid.values[" + std::to_string(i) +
                              "]: must be finite and nonnegative");
      }
      total += v;
    }
    if (!(total > 0.0)) {
      throw ValidationError("density.grid.values: all zero");
    }
  }
}

double evaluate_density(const DensitySpec& spec, const Bounds& domain,
                        const Eigen::Vector2d& p) {
  if (!domain.contains(p)) {
    throw std::domain_error("evaluate_density: point (" + fmt17(p.x()) + ", " + fmt17(p.y()) +
                            ") outside domain");
  }
  if (spec.kind == DensityKind::GaussianMixture) {
    double total = 0.0;
    for (const auto& c : spec.components) {
      const Eigen::Vector2d d = p - c.mean;
      const double det = c.cov.determinant();
      const Eigen::Matrix2d inv = c.cov.inverse();
      const double quad = d.dot(inv * d);
      total += c.weight * std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
    }
    return total;
  }
  const auto& g = spec.grid;
  const double dx = g.bounds.width() / g.cols;
  const double dy = g.bounds.height() / g.rows;
  int c = static_cast<int>(std::floor((p.x() - g.bounds.xmin) / dx));
  int r = static_cast<int>(std::floor((p.y() - g.bounds.ymin) / dy));
  c = std::max(0, std::min(g.cols - 1, c));
  r = std::max(0, std::min(g.rows - 1, r));
  return g.at(r, c);
}

SamplePointCloud sample_points(const DensitySpec& spec, const Bounds& domain, int n,
                               std::uint64_t seed) {
  validate_density(spec, domain);
  if (n < 1) throw ValidationError("sample_points: n must be >= 1");

  double sup = 0.0;
  if (spec.kind == DensityKind::GaussianMixture) {
    for (const auto& c : spec.components) sup += component_peak(c);
  } else {
    for (double v : spec.grid.values) sup = std::max(sup, v);
  }
  if (!(sup > 0.0)) throw DegenerateDensityError("sample_points: density has zero sup");

  Rng rng(seed);
  SamplePointCloud cloud;
  cloud.positions.reserve(n);
  long long draws = 0;
  while (cloud.size() < n) {
    const double x = rng.uniform(domain.xmin, domain.xmax);
    const double y = rng.uniform(domain.ymin, domain.ymax);
    const double u = rng.uniform();
    ++draws;
    const Eigen::Vector2d p(x, y);
    if (u * sup < evaluate_density(spec, domain, p)) {
      cloud.positions.push_back(p);
    }
    if (draws > 1'000'000 &&
        static_cast<double>(cloud.size()) / static_cast<double>(draws) < 1e-6) {
      throw DegenerateDensityError("sample_points: acceptance rate below 1e-6");
    }
  }
  cloud.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
  return cloud;
}

DensityGrid grid_from_density(const DensitySpec& spec, const Bounds& domain, int rows, int cols) {
  if (rows < 1 || cols < 1) throw ValidationError("grid_from_density: rows, cols must be >= 1");
  DensityGrid g;
  g.rows = rows;
  g.cols = cols;
  g.bounds = domain;
  g.values.resize(static_cast<std::size_t>(rows) * cols);
  const double dx = domain.width() / cols;
  const double dy = domain.height() / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Eigen::Vector2d center(domain.xmin + (c + 0.5) * dx, domain.ymin + (r + 0.5) * dy);
      g.values[static_cast<std::size_t>(r) * cols + c] = evaluate_density(spec, domain, center);
    }
  }
  return g;
}

DensityGrid load_density_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_density_grid: cannot open " + path);
  DensityGrid g;
  if (!(in >> g.rows >> g.cols >> g.bounds.xmin >> g.bounds.xmax >> g.bounds.ymin >>
        g.bounds.ymax)) {
    throw ValidationError("load_density_grid: bad header in " + path +
                          " (want: rows cols xmin xmax ymin ymax)");
  }
  if (g.rows < 1 || g.cols < 1) {
    throw ValidationError("load_density_grid: rows and cols must be >= 1 in " + path);
  }
  const std::size_t count = static_cast<std::size_t>(g.rows) * g.cols;
  g.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> g.values[i])) {
      throw ValidationError("load_density_grid: missing value " + std::to_string(i) + " (row " +
                            std::to_string(i / g.cols) + ", col " + std::to_string(i % g.cols) +
                            ") in " + path);
    }
  }
  DensitySpec spec;
  spec.kind = DensityKind::Grid;
  spec.grid = g;
  validate_density(spec, g.bounds);
  return g;
}

void save_density_grid(const DensityGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("save_density_grid: cannot open " + path);
  out << grid.rows << ' ' << grid.cols << ' ' << fmt17(grid.bounds.xmin) << ' '
      << fmt17(grid.bounds.xmax) << ' ' << fmt17(grid.bounds.ymin) << ' '
      << fmt17(grid.bounds.ymax) << '\n';
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      out << fmt17(grid.at(r, c)) << (c + 1 == grid.cols ? '\n' : ' ');
    }
  }
}

SamplePointCloud load_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_point_cloud: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,weight", 0) != 0) {
    throw ValidationError("load_point_cloud: missing x,y,weight header in " + path);
  }
  SamplePointCloud cloud;
  std::vector<double> weights;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double x, y, w;
    char c1, c2;
    if (!(ss >> x >> c1 >> y >> c2 >> w) || c1 != ',' || c2 != ',') {
      throw ValidationError("load_point_cloud: bad row at line " + std::to_string(lineno) +
                            " in " + path);
    }
    cloud.positions.emplace_back(x, y);
    weights.push_back(w);
  }
  if (cloud.positions.empty()) {
    throw ValidationError("load_point_cloud: no points in " + path);
  }
  cloud.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), weights.size());
  return cloud;
}

void save_point_cloud(const SamplePointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("save_point_cloud: cannot open " + path);
  out << "x,y,weight\n";
  for (int i = 0; i < cloud.size(); ++i) {
    out << fmt17(cloud.positions[i].x()) << ',' << fmt17(cloud.positions[i].y()) << ','
        << fmt17(cloud.weights[i]) << '\n';
  }
}

}  // namespace denscov
