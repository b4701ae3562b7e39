#include "cgfd/geometry.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace cgfd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::OffManifold: return "OffManifold";
    case ErrorKind::DegenerateJacobian: return "DegenerateJacobian";
    case ErrorKind::PseudoinverseFailure: return "PseudoinverseFailure";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::DataOutOfRange: return "DataOutOfRange";
    case ErrorKind::KnotsInvalid: return "KnotsInvalid";
    case ErrorKind::CayleySingular: return "CayleySingular";
    case ErrorKind::CovarianceNotSPD: return "CovarianceNotSPD";
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::InfeasibleInit: return "InfeasibleInit";
    case ErrorKind::EmptySamples: return "EmptySamples";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {

double fd_step(double x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x));
}

// Rejects Jacobians whose Gram matrix is singular or too badly conditioned.
void check_rank(const Matrix& grad_g, const Tolerances& tol) {
  if (grad_g.rows() == 0) return;
  const Matrix gram = grad_g * grad_g.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi <= 0.0 || lo <= 0.0 ||
      std::sqrt(lo) <= tol.rank_eps * std::sqrt(hi) || hi / lo > tol.cond_max) {
    throw Error(ErrorKind::RankDeficient,
                "constraint Jacobian is rank deficient or ill-conditioned (cond = " +
                    std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) +
                    ")");
  }
}

void fix_column_signs(Matrix& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      if (std::abs(basis(i, j)) > 1e-12) {
        if (basis(i, j) < 0.0) basis.col(j) *= -1.0;
        break;
      }
    }
  }
}

}  // namespace

Matrix ImplicitManifold::jacobian_derivative(const Vector& theta, int i) const {
  const double h = fd_step(theta(i));
  Vector plus = theta;
  Vector minus = theta;
  plus(i) += h;
  minus(i) -= h;
  return (constraint_jacobian(plus) - constraint_jacobian(minus)) / (plus(i) - minus(i));
}

FunctionManifold::FunctionManifold(int ambient_dim, int codim, ValueFn g, JacobianFn grad_g,
                                   JacobianDerivativeFn grad_g_derivative)
    : ambient_dim_(ambient_dim),
      codim_(codim),
      g_(std::move(g)),
      grad_g_(std::move(grad_g)),
      dgrad_g_(std::move(grad_g_derivative)) {
  if (ambient_dim_ <= 0 || codim_ < 0 || codim_ >= ambient_dim_) {
    throw Error(ErrorKind::BadShape, "manifold requires 0 <= codim < ambient_dim");
  }
}

Matrix FunctionManifold::jacobian_derivative(const Vector& theta, int i) const {
  if (dgrad_g_) return dgrad_g_(theta, i);
  return ImplicitManifold::jacobian_derivative(theta, i);
}

Matrix projection_matrix_from_jacobian(const Matrix& grad_g, const Tolerances& tol) {
  const Eigen::Index d = grad_g.cols();
  if (grad_g.rows() == 0) return Matrix::Identity(d, d);
  check_rank(grad_g, tol);
  const Matrix gram = grad_g * grad_g.transpose();
  const Matrix solved = gram.ldlt().solve(grad_g);  // (G G^T)^{-1} G
  Matrix p = Matrix::Identity(d, d) - grad_g.transpose() * solved;
  return 0.5 * (p + p.transpose());
}

Matrix projection_matrix(const ImplicitManifold& m, const Vector& theta, const Tolerances& tol) {
  return projection_matrix_from_jacobian(m.constraint_jacobian(theta), tol);
}

Matrix implicit_function_projection(const Matrix& grad_phi) {
  const Eigen::Index t = grad_phi.rows();
  const Eigen::Index k = grad_phi.cols();
  Matrix block(t, k + t);
  block << -grad_phi, Matrix::Identity(t, t);
  const Matrix inner = grad_phi * grad_phi.transpose() + Matrix::Identity(t, t);
  return Matrix::Identity(k + t, k + t) - block.transpose() * inner.ldlt().solve(block);
}

TangentFrame tangent_frame_from_jacobian(const Vector& theta, const Matrix& grad_g,
                                         const Tolerances& tol) {
  const Eigen::Index d = grad_g.cols();
  const Eigen::Index t = grad_g.rows();
  TangentFrame frame;
  frame.point = theta;
  if (t == 0) {
    frame.tangent = Matrix::Identity(d, d);
    frame.normal = Matrix(d, 0);
    return frame;
  }
  check_rank(grad_g, tol);
  // Householder QR of G^T: the leading t columns of the orthogonal factor span
  // row(G), the trailing d - t span null(G).
  Eigen::HouseholderQR<Matrix> qr(grad_g.transpose());
  const Matrix q = qr.householderQ();
  frame.normal = q.leftCols(t);
  frame.tangent = q.rightCols(d - t);
  fix_column_signs(frame.normal);
  fix_column_signs(frame.tangent);
  return frame;
}

TangentFrame tangent_frame(const ImplicitManifold& m, const Vector& theta, const Tolerances& tol) {
  return tangent_frame_from_jacobian(theta, m.constraint_jacobian(theta), tol);
}

double log_gram_det_scale(const Matrix& m) {
  const Matrix gram = m.transpose() * m;
  Eigen::LLT<Matrix> llt(0.5 * (gram + gram.transpose()));
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const auto diag = llt.matrixLLT().diagonal();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0)) return -std::numeric_limits<double>::infinity();
    sum += std::log(diag(i));
  }
  return sum;
}

double log_pseudo_det_scale(const Matrix& jacobian, const TangentFrame& frame) {
  return log_gram_det_scale(jacobian * frame.tangent);
}

double pseudo_det_scale(const Matrix& jacobian, const TangentFrame& frame) {
  const double log_scale = log_pseudo_det_scale(jacobian, frame);
  return std::isfinite(log_scale) ? std::exp(log_scale) : 0.0;
}

Projection project_along(const ImplicitManifold& m, const Vector& y0, const Matrix& directions,
                         const Tolerances& tol) {
  Projection result;
  result.coefficients = Vector::Zero(directions.cols());
  result.point = y0;
  for (int iter = 1; iter <= tol.max_newton_iters; ++iter) {
    result.iterations = iter;
    const Vector residual = m.constraint(result.point);
    if (!residual.allFinite()) {
      result.status = ProjectionStatus::NoConvergence;
      return result;
    }
    if (residual.norm() <= tol.project) {
      result.status = ProjectionStatus::Converged;
      return result;
    }
    const Matrix system = m.constraint_jacobian(result.point) * directions;
    Eigen::PartialPivLU<Matrix> lu(system);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
      result.status = ProjectionStatus::SingularSystem;
      return result;
    }
    result.coefficients -= lu.solve(residual);
    result.point = y0 + directions * result.coefficients;
  }
  result.status = ProjectionStatus::NoConvergence;
  return result;
}

Projection project_to_manifold(const ImplicitManifold& m, const Vector& y0,
                               const TangentFrame& frame_at_x, const Tolerances& tol) {
  return project_along(m, y0, frame_at_x.normal, tol);
}

}  // namespace cgfd
