#pragma once

#include "cgfd/fiducial.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace cgfd {

/// u = (azimuth in [-pi, pi], polar angle in [0, pi]) on the unit sphere in R^3.
class SpherePolarChart final : public Chart {
 public:
  int intrinsic_dim() const override { return 2; }
  int ambient_dim() const override { return 3; }
  Vector to_ambient(const Vector& u) const override;
  Matrix to_ambient_jacobian(const Vector& u) const override;
  Vector lower() const override;
  Vector upper() const override;
};

/// u = angle in [-pi, pi] on the unit circle in R^2.
class CircleChart final : public Chart {
 public:
  int intrinsic_dim() const override { return 1; }
  int ambient_dim() const override { return 2; }
  Vector to_ambient(const Vector& u) const override;
  Matrix to_ambient_jacobian(const Vector& u) const override;
  Vector lower() const override;
  Vector upper() const override;
};

/// Midpoint-rule cell masses over a tensor grid in chart coordinates.
struct GridDensity {
  std::shared_ptr<const Chart> chart;
  std::vector<int> resolution;  // cells per chart coordinate
  Matrix u;                     // cell centres, one per row
  Matrix theta;                 // their images on the manifold
  Vector mass;                  // sums to 1
  /// log of the integral of the kernel against the manifold volume before
  /// normalization.
  double log_normalizer = 0.0;
};

/// Cells weighted by exp(log_kernel(theta)) * area element * cell volume.
/// Throws NonFinite if the kernel is not finite at some node.
GridDensity normalize_on_chart(const std::function<double(const Vector&)>& log_kernel,
                               std::shared_ptr<const Chart> chart, int resolution);

/// Same grid, but log_kernel_u is already a log density in chart coordinates
/// (it carries its own area factor), so no area element is applied.
GridDensity normalize_in_chart_coords(const std::function<double(const Vector&)>& log_kernel_u,
                                      std::shared_ptr<const Chart> chart, int resolution);

/// Total mass of cells whose manifold point satisfies the predicate.
double region_mass(const GridDensity& density, const std::function<bool(const Vector&)>& region);

/// Density per unit volume at each cell: mass / (area element * cell volume).
Vector surface_density(const GridDensity& density);

/// Order-independent pairwise summation.
double pairwise_sum(const double* values, std::size_t n);
inline double pairwise_sum(const Vector& v) {
  return pairwise_sum(v.data(), static_cast<std::size_t>(v.size()));
}

/// Writes u..., theta..., mass columns with a header row.
void write_csv(const GridDensity& density, std::ostream& out);

/// Piecewise-linear CDF of a one-dimensional grid density in its chart
/// coordinate, knotted at cell edges.
class GridCdf {
 public:
  explicit GridCdf(const GridDensity& density);
  double operator()(double u) const;

 private:
  std::vector<double> edges_;
  std::vector<double> cumulative_;
};

/// sup |F_n - F| over the sorted sample, checking both sides of every jump.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace cgfd
