#include "cgfd/quadrature.hpp"

#include "cgfd/format.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace cgfd {

namespace {

constexpr double kPi = std::numbers::pi;

GridDensity build_grid(const std::function<double(const Vector&)>& log_weight_u,
                       std::shared_ptr<const Chart> chart, int resolution, bool use_area) {
  if (resolution < 1) throw Error(ErrorKind::InvalidConfig, "resolution must be positive");
  const int k = chart->intrinsic_dim();
  if (k < 1 || k > 2) throw Error(ErrorKind::BadShape, "grid quadrature supports 1- or 2-d charts");
  const Vector lo = chart->lower();
  const Vector hi = chart->upper();
  const Vector step = (hi - lo) / static_cast<double>(resolution);
  const double cell_volume = step.prod();

  const Eigen::Index cells = k == 1 ? resolution : static_cast<Eigen::Index>(resolution) * resolution;
  GridDensity out;
  out.chart = chart;
  out.resolution.assign(static_cast<std::size_t>(k), resolution);
  out.u.resize(cells, k);
  out.theta.resize(cells, chart->ambient_dim());
  Vector log_w(cells);
  for (Eigen::Index c = 0; c < cells; ++c) {
    Vector u(k);
    u(0) = lo(0) + (static_cast<double>(c % resolution) + 0.5) * step(0);
    if (k == 2) u(1) = lo(1) + (static_cast<double>(c / resolution) + 0.5) * step(1);
    out.u.row(c) = u.transpose();
    out.theta.row(c) = chart->to_ambient(u).transpose();
    double lw = log_weight_u(u);
    if (!std::isfinite(lw)) throw Error(ErrorKind::NonFinite, "kernel is not finite on the grid");
    if (use_area) lw += std::log(chart->area_element(u));
    log_w(c) = lw + std::log(cell_volume);
  }

  const double top = log_w.maxCoeff();
  out.mass = (log_w.array() - top).exp().matrix();
  const double total = pairwise_sum(out.mass);
  out.mass /= total;
  out.log_normalizer = top + std::log(total);
  return out;
}

}  // namespace

Vector SpherePolarChart::to_ambient(const Vector& u) const {
  Vector mu(3);
  mu << std::sin(u(1)) * std::cos(u(0)), std::sin(u(1)) * std::sin(u(0)), std::cos(u(1));
  return mu;
}

Matrix SpherePolarChart::to_ambient_jacobian(const Vector& u) const {
  const double st = std::sin(u(1)), ct = std::cos(u(1));
  const double sa = std::sin(u(0)), ca = std::cos(u(0));
  Matrix jac(3, 2);
  jac << -st * sa, ct * ca,
          st * ca, ct * sa,
          0.0, -st;
  return jac;
}

Vector SpherePolarChart::lower() const {
  Vector lo(2);
  lo << -kPi, 0.0;
  return lo;
}

Vector SpherePolarChart::upper() const { return Vector::Constant(2, kPi); }

Vector CircleChart::to_ambient(const Vector& u) const {
  Vector x(2);
  x << std::cos(u(0)), std::sin(u(0));
  return x;
}

Matrix CircleChart::to_ambient_jacobian(const Vector& u) const {
  Matrix jac(2, 1);
  jac << -std::sin(u(0)), std::cos(u(0));
  return jac;
}

Vector CircleChart::lower() const { return Vector::Constant(1, -kPi); }
Vector CircleChart::upper() const { return Vector::Constant(1, kPi); }

GridDensity normalize_on_chart(const std::function<double(const Vector&)>& log_kernel,
                               std::shared_ptr<const Chart> chart, int resolution) {
  const Chart& c = *chart;
  return build_grid([&](const Vector& u) { return log_kernel(c.to_ambient(u)); },
                    std::move(chart), resolution, true);
}

GridDensity normalize_in_chart_coords(const std::function<double(const Vector&)>& log_kernel_u,
                                      std::shared_ptr<const Chart> chart, int resolution) {
  return build_grid(log_kernel_u, std::move(chart), resolution, false);
}

double region_mass(const GridDensity& density, const std::function<bool(const Vector&)>& region) {
  Vector selected = Vector::Zero(density.mass.size());
  for (Eigen::Index c = 0; c < density.mass.size(); ++c) {
    if (region(density.theta.row(c).transpose())) selected(c) = density.mass(c);
  }
  return std::clamp(pairwise_sum(selected), 0.0, 1.0);
}

Vector surface_density(const GridDensity& density) {
  const Vector lo = density.chart->lower();
  const Vector hi = density.chart->upper();
  double cell_volume = 1.0;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    cell_volume *= (hi(i) - lo(i)) / density.resolution[static_cast<std::size_t>(i)];
  }
  Vector out(density.mass.size());
  for (Eigen::Index c = 0; c < out.size(); ++c) {
    out(c) = density.mass(c) / (density.chart->area_element(density.u.row(c).transpose()) * cell_volume);
  }
  return out;
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

void write_csv(const GridDensity& density, std::ostream& out) {
  const Eigen::Index k = density.u.cols();
  const Eigen::Index d = density.theta.cols();
  for (Eigen::Index i = 0; i < k; ++i) out << "u" << i << ',';
  for (Eigen::Index i = 0; i < d; ++i) out << "theta" << i << ',';
  out << "mass\n";
  for (Eigen::Index c = 0; c < density.mass.size(); ++c) {
    for (Eigen::Index i = 0; i < k; ++i) out << format_double(density.u(c, i)) << ',';
    for (Eigen::Index i = 0; i < d; ++i) out << format_double(density.theta(c, i)) << ',';
    out << format_double(density.mass(c)) << '\n';
  }
}

GridCdf::GridCdf(const GridDensity& density) {
  if (density.u.cols() != 1) throw Error(ErrorKind::BadShape, "GridCdf needs a 1-d chart");
  const double lo = density.chart->lower()(0);
  const double hi = density.chart->upper()(0);
  const int n = density.resolution.front();
  edges_.resize(static_cast<std::size_t>(n) + 1);
  cumulative_.resize(static_cast<std::size_t>(n) + 1);
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    edges_[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n;
    cumulative_[static_cast<std::size_t>(i)] = acc;
    if (i < n) acc += density.mass(i);
  }
  for (double& c : cumulative_) c /= acc;
}

double GridCdf::operator()(double u) const {
  if (u <= edges_.front()) return 0.0;
  if (u >= edges_.back()) return 1.0;
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - edges_.begin()) - 1;
  const double w = (u - edges_[i]) / (edges_[i + 1] - edges_[i]);
  return cumulative_[i] + w * (cumulative_[i + 1] - cumulative_[i]);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error(ErrorKind::EmptySamples, "KS distance needs samples");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    worst = std::max({worst, std::abs(f - static_cast<double>(i) / n),
                      std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return worst;
}

}  // namespace cgfd
