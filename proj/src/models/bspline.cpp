#include "cgfd/models/bspline.hpp"

#include <algorithm>
#include <cmath>

namespace cgfd {

std::array<double, 3> exp_moments(double beta, double h) {
  const double x = beta * h;
  if (std::abs(x) <= 1.0) {
    // h^{k+1} sum_m x^m / (m! (k + m + 1))
    std::array<double, 3> sums{0.0, 0.0, 0.0};
    double term = 1.0;  // x^m / m!
    for (int m = 0; m < 30; ++m) {
      for (int k = 0; k < 3; ++k) sums[k] += term / static_cast<double>(k + m + 1);
      term *= x / static_cast<double>(m + 1);
    }
    return {h * sums[0], h * h * sums[1], h * h * h * sums[2]};
  }
  const double e = std::exp(x);
  const double e0 = std::expm1(x) / beta;
  const double e1 = (h * e - e0) / beta;
  const double e2 = (h * h * e - 2.0 * e1) / beta;
  return {e0, e1, e2};
}

LinearBSplineBasis::LinearBSplineBasis(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 3) {
    throw Error(ErrorKind::KnotsInvalid, "a linear B-spline basis needs at least 3 knots");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw Error(ErrorKind::KnotsInvalid, "knots must be strictly increasing");
    }
  }
  if (!(knots_.front() <= 0.0 && knots_.back() >= 1.0)) {
    throw Error(ErrorKind::KnotsInvalid, "knots must cover [0, 1]");
  }

  std::vector<double> breaks{0.0};
  for (double k : knots_) {
    if (k > 0.0 && k < 1.0) breaks.push_back(k);
  }
  breaks.push_back(1.0);

  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    Segment seg;
    seg.start = breaks[s];
    seg.width = breaks[s + 1] - breaks[s];
    // Each basis function is linear on the segment; recover its coefficients
    // from two interior evaluations.
    const double t1 = seg.start + 0.25 * seg.width;
    const double t2 = seg.start + 0.75 * seg.width;
    const Vector b1 = evaluate(t1);
    const Vector b2 = evaluate(t2);
    for (int j = 0; j < size(); ++j) {
      if (b1(j) == 0.0 && b2(j) == 0.0) continue;
      const double c1 = (b2(j) - b1(j)) / (t2 - t1);
      const double c0 = b1(j) - c1 * (t1 - seg.start);
      seg.pieces.push_back({j, c0, c1});
    }
    segments_.push_back(std::move(seg));
  }
}

Vector LinearBSplineBasis::evaluate(double t) const {
  const int n_knots = static_cast<int>(knots_.size());
  // Degree-0 indicators on [kappa_i, kappa_{i+1}); the last span is closed.
  Vector order0 = Vector::Zero(n_knots - 1);
  for (int i = 0; i + 1 < n_knots; ++i) {
    const bool last = (i + 2 == n_knots);
    if (t >= knots_[i] && (t < knots_[i + 1] || (last && t == knots_[i + 1]))) order0(i) = 1.0;
  }
  Vector basis(size());
  for (int j = 0; j < size(); ++j) {
    const double left = (t - knots_[j]) / (knots_[j + 1] - knots_[j]);
    const double right = (knots_[j + 2] - t) / (knots_[j + 2] - knots_[j + 1]);
    basis(j) = left * order0(j) + right * order0(j + 1);
  }
  return basis;
}

int LinearBSplineBasis::segment_of(double t) const {
  const int n = static_cast<int>(segments_.size());
  for (int s = 0; s < n; ++s) {
    if (t < segments_[s].start + segments_[s].width) return s;
  }
  return n - 1;
}

std::vector<double> LinearBSplineBasis::knots_in_unit_interval() const {
  std::vector<double> inside;
  for (double k : knots_) {
    if (k >= 0.0 && k <= 1.0) inside.push_back(k);
  }
  return inside;
}

std::vector<double> default_logspline_knots() {
  std::vector<double> knots;
  for (int i = 0; i < 9; ++i) knots.push_back(-0.15 + 0.15 * i);
  return knots;
}

}  // namespace cgfd
