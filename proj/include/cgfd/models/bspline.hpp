#pragma once

#include "cgfd/types.hpp"

#include <array>
#include <vector>

namespace cgfd {

/// E_k(beta, h) = int_0^h tau^k exp(beta tau) dtau for k = 0, 1, 2.
/// Uses a power series when |beta h| <= 1 to avoid cancellation.
std::array<double, 3> exp_moments(double beta, double h);

/// Degree-1 B-spline basis on a knot vector kappa_0 < ... < kappa_{K-1},
/// restricted to the unit interval. Basis function j (0-based) is the hat
/// centred at kappa_{j+1}, so there are K - 2 of them.
class LinearBSplineBasis {
 public:
  /// Linear piece of one basis function on a segment: c0 + c1 * (t - start).
  struct Piece {
    int index;
    double c0;
    double c1;
  };
  struct Segment {
    double start;
    double width;
    std::vector<Piece> pieces;
  };

  explicit LinearBSplineBasis(std::vector<double> knots);

  int size() const { return static_cast<int>(knots_.size()) - 2; }
  const std::vector<double>& knots() const { return knots_; }
  /// Integration segments covering [0, 1], split at every interior knot.
  const std::vector<Segment>& segments() const { return segments_; }

  /// All basis values at t via the Cox-de Boor recursion.
  Vector evaluate(double t) const;
  /// Index of the segment containing t in [0, 1].
  int segment_of(double t) const;

  /// Knots strictly inside [0, 1] (inclusive of the endpoints).
  std::vector<double> knots_in_unit_interval() const;

 private:
  std::vector<double> knots_;
  std::vector<Segment> segments_;
};

/// 9 knots spaced 0.15 apart, starting one spacing below zero.
std::vector<double> default_logspline_knots();

}  // namespace cgfd
