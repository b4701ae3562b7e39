#pragma once

#include "cgfd/types.hpp"

#include <functional>
#include <optional>

namespace cgfd {

/// A level set M = { theta : g(theta) = 0 } with g : R^d -> R^t.
///
/// Implementations supply g and its t x d Jacobian. The derivative of the
/// Jacobian is optional; callers that need it fall back to finite differences.
class ImplicitManifold {
 public:
  virtual ~ImplicitManifold() = default;

  virtual int ambient_dim() const = 0;
  virtual int codim() const = 0;
  virtual Vector constraint(const Vector& theta) const = 0;
  virtual Matrix constraint_jacobian(const Vector& theta) const = 0;

  virtual bool has_jacobian_derivative() const { return false; }
  /// d/dtheta_i of constraint_jacobian, a t x d matrix.
  virtual Matrix jacobian_derivative(const Vector& theta, int i) const;

  int intrinsic_dim() const { return ambient_dim() - codim(); }
  double violation(const Vector& theta) const { return constraint(theta).norm(); }
};

/// Manifold assembled from callables; handy for one-off constraints.
class FunctionManifold final : public ImplicitManifold {
 public:
  using ValueFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;
  using JacobianDerivativeFn = std::function<Matrix(const Vector&, int)>;

  FunctionManifold(int ambient_dim, int codim, ValueFn g, JacobianFn grad_g,
                   JacobianDerivativeFn grad_g_derivative = {});

  int ambient_dim() const override { return ambient_dim_; }
  int codim() const override { return codim_; }
  Vector constraint(const Vector& theta) const override { return g_(theta); }
  Matrix constraint_jacobian(const Vector& theta) const override { return grad_g_(theta); }
  bool has_jacobian_derivative() const override { return static_cast<bool>(dgrad_g_); }
  Matrix jacobian_derivative(const Vector& theta, int i) const override;

 private:
  int ambient_dim_;
  int codim_;
  ValueFn g_;
  JacobianFn grad_g_;
  JacobianDerivativeFn dgrad_g_;
};

/// Orthonormal tangent and normal bases at a point of M.
struct TangentFrame {
  Vector point;
  Matrix tangent;  // d x (d - t), spans null(grad_g)
  Matrix normal;   // d x t, spans row(grad_g)

  Matrix projection() const { return tangent * tangent.transpose(); }
};

/// P = I - G^T (G G^T)^{-1} G for G = grad_g(theta).
/// Throws RankDeficient when G G^T is too badly conditioned.
Matrix projection_matrix(const ImplicitManifold& m, const Vector& theta,
                         const Tolerances& tol = {});
Matrix projection_matrix_from_jacobian(const Matrix& grad_g, const Tolerances& tol = {});

/// Projection written through the implicit function phi with
/// grad_phi (t x (d-t)) = -G2^{-1} G1, where G = [G1 G2] and the last t
/// coordinates are solved for. Depends on g only through phi.
Matrix implicit_function_projection(const Matrix& grad_phi);

/// Tangent frame at theta. Columns follow a fixed sign convention: the first
/// entry with magnitude above 1e-12 is nonnegative.
TangentFrame tangent_frame(const ImplicitManifold& m, const Vector& theta,
                           const Tolerances& tol = {});
TangentFrame tangent_frame_from_jacobian(const Vector& theta, const Matrix& grad_g,
                                         const Tolerances& tol = {});

/// D(M Q) = sqrt(det(Q^T M^T M Q)), the pseudodeterminant scale of M P.
/// Returns 0 when the Gram matrix is not positive definite.
double pseudo_det_scale(const Matrix& jacobian, const TangentFrame& frame);
/// log of pseudo_det_scale; -infinity when degenerate.
double log_pseudo_det_scale(const Matrix& jacobian, const TangentFrame& frame);

/// log D(M) = 0.5 log det(M^T M) for a full-column-rank M; -infinity otherwise.
double log_gram_det_scale(const Matrix& m);

enum class ProjectionStatus { Converged, NoConvergence, SingularSystem };

struct Projection {
  Vector point;
  Vector coefficients;  // a in y = y0 + N a
  ProjectionStatus status = ProjectionStatus::NoConvergence;
  int iterations = 0;

  bool ok() const { return status == ProjectionStatus::Converged; }
};

/// Solves g(y0 + N a) = 0 for a by Newton iteration, with N a d x t matrix of
/// search directions. Full steps, no line search.
Projection project_along(const ImplicitManifold& m, const Vector& y0, const Matrix& directions,
                         const Tolerances& tol = {});

/// Projection along the normal space at the proposal origin x.
Projection project_to_manifold(const ImplicitManifold& m, const Vector& y0,
                               const TangentFrame& frame_at_x, const Tolerances& tol = {});

}  // namespace cgfd
