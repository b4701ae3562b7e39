#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace cgfd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorKind {
  RankDeficient,
  OffManifold,
  DegenerateJacobian,
  PseudoinverseFailure,
  OutOfDomain,
  NonFinite,
  EmptyData,
  DataOutOfRange,
  KnotsInvalid,
  CayleySingular,
  CovarianceNotSPD,
  BadShape,
  InfeasibleInit,
  EmptySamples,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Numerical thresholds shared by geometry, kernels and samplers.
struct Tolerances {
  double on_manifold = 1e-8;   // ||g(theta)|| accepted as feasible
  double project = 1e-10;      // Newton target for projections
  int max_newton_iters = 50;
  double rank_eps = 1e-10;     // relative to the largest singular value
  double cond_max = 1e12;      // condition number of grad_g * grad_g^T
};

}  // namespace cgfd
