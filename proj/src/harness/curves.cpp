#include "cgfd/harness/curves.hpp"

#include "cgfd/harness/study.hpp"

#include <algorithm>
#include <cmath>

namespace cgfd {

Vector min_distance_point(const Matrix& samples) {
  if (samples.rows() == 0) throw Error(ErrorKind::EmptySamples, "no samples");
  const Vector mean = samples.colwise().mean().transpose();
  Eigen::Index best = 0;
  (samples.rowwise() - mean.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return samples.row(best).transpose();
}

ConfidenceCurves confidence_curves(const Matrix& samples, const LinearBSplineBasis& basis,
                                   double level) {
  if (samples.rows() == 0) throw Error(ErrorKind::EmptySamples, "no samples");
  ConfidenceCurves out;
  out.knots = basis.knots_in_unit_interval();
  const auto m = static_cast<Eigen::Index>(out.knots.size());
  Matrix values(samples.rows(), m);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    values.row(i) = logspline_knot_values(basis, samples.row(i).transpose()).transpose();
  }
  out.upper.resize(m);
  out.lower.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    std::vector<double> col(values.col(j).data(), values.col(j).data() + values.rows());
    std::sort(col.begin(), col.end());
    out.upper(j) = upper_bound(col, level);
    out.lower(j) = upper_bound(col, 1.0 - level);
  }
  out.point_theta = min_distance_point(samples);
  out.point = logspline_knot_values(basis, out.point_theta);
  return out;
}

double interpolate_curve(const std::vector<double>& knots, const Vector& values, double t) {
  if (knots.empty()) throw Error(ErrorKind::EmptySamples, "no knots");
  if (t <= knots.front()) return values(0);
  if (t >= knots.back()) return values(values.size() - 1);
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  const auto i = static_cast<Eigen::Index>(it - knots.begin()) - 1;
  const double w = (t - knots[static_cast<std::size_t>(i)]) /
                   (knots[static_cast<std::size_t>(i) + 1] - knots[static_cast<std::size_t>(i)]);
  return (1.0 - w) * values(i) + w * values(i + 1);
}

Vector kl_reference_theta(const LinearBSplineBasis& basis, const TriangularDistribution& truth) {
  const Vector moments =
      expected_basis(basis, [&](double t) { return truth.pdf(t); }, {truth.mode});
  return fit_logspline(basis, moments);
}

double kl_divergence(const LinearBSplineBasis& basis, const TriangularDistribution& truth,
                     const Vector& theta) {
  // E_p[log f_theta] = theta . E_p[B] - log Z; the entropy part is closed form.
  const Vector moments =
      expected_basis(basis, [&](double t) { return truth.pdf(t); }, {truth.mode});
  const double log_z = std::log(logspline_integrals(basis, theta).normalizer);
  // int p log p for a triangular law on [a, b]: log(2/(b - a)) - 1/2.
  const double neg_entropy = std::log(2.0 / (truth.upper - truth.lower)) - 0.5;
  return neg_entropy - (theta.dot(moments) - log_z);
}

}  // namespace cgfd
