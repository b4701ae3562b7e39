#pragma once

#include "cgfd/models/logspline.hpp"

#include <vector>

namespace cgfd {

/// Pointwise fiducial bands for a logspline density at the knots in [0, 1].
/// The bands are per-knot order statistics and need not be feasible curves.
struct ConfidenceCurves {
  std::vector<double> knots;
  Vector upper;        // level quantile of exp(s(knot))
  Vector lower;        // (1 - level) quantile
  Vector point;        // exp(s(knot)) at the point estimate
  Vector point_theta;  // retained draw closest to the ambient mean
};

/// Row of samples nearest (Euclidean) to the column mean.
Vector min_distance_point(const Matrix& samples);

ConfidenceCurves confidence_curves(const Matrix& samples, const LinearBSplineBasis& basis,
                                   double level);

/// Linear interpolation of knot values; flat outside the knot range.
double interpolate_curve(const std::vector<double>& knots, const Vector& values, double t);

/// Member of the family closest in KL divergence to a triangular law.
Vector kl_reference_theta(const LinearBSplineBasis& basis, const TriangularDistribution& truth);

/// KL(p || f_theta) = int p log p - int p log f_theta for a triangular p.
double kl_divergence(const LinearBSplineBasis& basis, const TriangularDistribution& truth,
                     const Vector& theta);

}  // namespace cgfd
