#pragma once

#include "cgfd/geometry.hpp"
#include "cgfd/types.hpp"

namespace cgfd {

/// A data-generating algorithm y = A(W, theta) with the data already bound.
///
/// dga_gradient returns grad_theta A evaluated at W = A^{-1}(y, theta), an
/// n_out x d matrix. Optional derivatives default to central differences.
class FiducialModel {
 public:
  virtual ~FiducialModel() = default;

  virtual int param_dim() const = 0;
  virtual double log_likelihood(const Vector& theta) const = 0;
  virtual Matrix dga_gradient(const Vector& theta) const = 0;

  virtual Vector log_likelihood_gradient(const Vector& theta) const;
  /// d/dtheta_i of dga_gradient.
  virtual Matrix dga_gradient_derivative(const Vector& theta, int i) const;
};

/// Inverse coordinate chart psi^{-1} : U -> M over an axis-aligned box U.
class Chart {
 public:
  virtual ~Chart() = default;

  virtual int intrinsic_dim() const = 0;
  virtual int ambient_dim() const = 0;
  virtual Vector to_ambient(const Vector& u) const = 0;
  /// d x k matrix grad_u psi^{-1}(u).
  virtual Matrix to_ambient_jacobian(const Vector& u) const = 0;
  virtual Vector lower() const = 0;
  virtual Vector upper() const = 0;

  bool contains(const Vector& u) const;
  /// Area element D(grad_u psi^{-1}(u)).
  double area_element(const Vector& u) const;
};

/// log f(y|theta) + log D(grad A). Throws DegenerateJacobian if grad A is not
/// of full column rank.
double gfd_log_kernel(const FiducialModel& model, const Vector& theta);

/// log f(y|theta) + log D*(grad A P_theta), the unnormalized constrained kernel.
/// Throws OffManifold for infeasible theta, DegenerateJacobian when the
/// pseudodeterminant vanishes.
double cgfd_log_kernel(const FiducialModel& model, const ImplicitManifold& m,
                       const Vector& theta, const Tolerances& tol = {});
/// Same kernel with a precomputed frame; feasibility is the caller's contract.
double cgfd_log_kernel(const FiducialModel& model, const TangentFrame& frame);

/// Gradient of the log constrained kernel, d log f/dtheta_i plus
/// 0.5 Tr[(A' P A'^T)^+ d(A' P A'^T)/dtheta_i] with A' = grad A.
Vector cgfd_grad_log(const FiducialModel& model, const ImplicitManifold& m, const Vector& theta,
                     const Tolerances& tol = {});

/// log f(y|psi^{-1}(u)) + log D(grad A * grad_u psi^{-1}(u)).
double parameterized_gfd_log_kernel(const FiducialModel& model, const Chart& chart,
                                    const Vector& u);

/// Extrinsic (ambient-concentration) kernel:
/// gfd_log_kernel(theta) - 0.5 log det(G G^T).
double hwang_log_kernel(const FiducialModel& model, const ImplicitManifold& m,
                        const Vector& theta, const Tolerances& tol = {});

}  // namespace cgfd
