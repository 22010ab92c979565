#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace denscov {

/// Axis-aligned rectangular domain.
struct Bounds {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

struct GaussianComponent {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  double weight = 1.0;
};

/// Piecewise-constant density on a regular grid. Row 0 spans [ymin, ymin+dy),
/// column 0 spans [xmin, xmin+dx); values are row-major.
struct DensityGrid {
  int rows = 0;
  int cols = 0;
  Bounds bounds;
  std::vector<double> values;  // rows * cols, row-major

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

enum class DensityKind { GaussianMixture, Grid };

/// A target density over a rectangular domain, either a Gaussian mixture or a
/// grid of cell values. Mixture weights must be positive; they are treated as
/// relative masses (evaluate_density does not renormalize them).
struct DensitySpec {
  DensityKind kind = DensityKind::GaussianMixture;
  std::vector<GaussianComponent> components;
  DensityGrid grid;
};

/// Weighted point cloud q_1..q_N with per-point weights beta.
struct SamplePointCloud {
  std::vector<Eigen::Vector2d> positions;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(positions.size()); }
};

/// Throws ValidationError when the spec is malformed (bad covariance,
/// non-positive weights, empty or negative grid, inverted bounds).
void validate_density(const DensitySpec& spec, const Bounds& domain);

/// Density value at p. For grids, p maps to the containing cell, clamped to
/// the edge cells on the boundary. Throws std::domain_error outside `domain`.
double evaluate_density(const DensitySpec& spec, const Bounds& domain, const Eigen::Vector2d& p);

/// Draw n points by rejection sampling against the sup of the density over
/// the domain, each with weight 1/n. Deterministic for a fixed seed.
SamplePointCloud sample_points(const DensitySpec& spec, const Bounds& domain, int n,
                               std::uint64_t seed);

/// Tabulate evaluate_density at cell centers of a rows x cols grid.
DensityGrid grid_from_density(const DensitySpec& spec, const Bounds& domain, int rows, int cols);

/// Grid file format: header "rows cols xmin xmax ymin ymax", then rows*cols
/// whitespace-separated values in row-major order.
DensityGrid load_density_grid(const std::string& path);
void save_density_grid(const DensityGrid& grid, const std::string& path);

/// Cloud CSV format: header "x,y,weight", one row per point, 17 significant digits.
SamplePointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const SamplePointCloud& cloud, const std::string& path);

}  // namespace denscov
