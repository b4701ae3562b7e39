#include "cgfd/fiducial.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cgfd {

namespace {

double fd_step(double x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x));
}

void require_feasible(const ImplicitManifold& m, const Vector& theta, const Tolerances& tol) {
  const double v = m.violation(theta);
  if (!(v <= tol.on_manifold)) {
    std::ostringstream msg;
    msg << "point is off the manifold (||g|| = " << v << ")";
    throw Error(ErrorKind::OffManifold, msg.str());
  }
}

double require_finite_scale(double log_scale, const char* what) {
  if (!std::isfinite(log_scale)) {
    throw Error(ErrorKind::DegenerateJacobian, std::string(what) + " is rank deficient");
  }
  return log_scale;
}

// d P / d theta_i from the derivative of the constraint Jacobian.
Matrix projection_derivative(const Matrix& grad_g, const Matrix& dgrad_g, const Matrix& p) {
  const Matrix gram = grad_g * grad_g.transpose();
  const Matrix pinv = gram.ldlt().solve(grad_g).transpose();  // G^T (G G^T)^{-1}
  const Matrix half = pinv * dgrad_g * p;
  return -(half + half.transpose());
}

}  // namespace

Vector FiducialModel::log_likelihood_gradient(const Vector& theta) const {
  Vector grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = fd_step(theta(i));
    Vector plus = theta;
    Vector minus = theta;
    plus(i) += h;
    minus(i) -= h;
    grad(i) = (log_likelihood(plus) - log_likelihood(minus)) / (plus(i) - minus(i));
  }
  return grad;
}

Matrix FiducialModel::dga_gradient_derivative(const Vector& theta, int i) const {
  const double h = fd_step(theta(i));
  Vector plus = theta;
  Vector minus = theta;
  plus(i) += h;
  minus(i) -= h;
  return (dga_gradient(plus) - dga_gradient(minus)) / (plus(i) - minus(i));
}

bool Chart::contains(const Vector& u) const {
  if (u.size() != intrinsic_dim()) return false;
  const Vector lo = lower();
  const Vector hi = upper();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u(i) >= lo(i) && u(i) <= hi(i))) return false;
  }
  return true;
}

double Chart::area_element(const Vector& u) const {
  const double log_scale = log_gram_det_scale(to_ambient_jacobian(u));
  return std::isfinite(log_scale) ? std::exp(log_scale) : 0.0;
}

double gfd_log_kernel(const FiducialModel& model, const Vector& theta) {
  const double log_jac = require_finite_scale(log_gram_det_scale(model.dga_gradient(theta)),
                                              "DGA gradient");
  return model.log_likelihood(theta) + log_jac;
}

double cgfd_log_kernel(const FiducialModel& model, const TangentFrame& frame) {
  const double log_jac = require_finite_scale(
      log_pseudo_det_scale(model.dga_gradient(frame.point), frame), "projected DGA gradient");
  return model.log_likelihood(frame.point) + log_jac;
}

double cgfd_log_kernel(const FiducialModel& model, const ImplicitManifold& m,
                       const Vector& theta, const Tolerances& tol) {
  require_feasible(m, theta, tol);
  return cgfd_log_kernel(model, tangent_frame(m, theta, tol));
}

Vector cgfd_grad_log(const FiducialModel& model, const ImplicitManifold& m, const Vector& theta,
                     const Tolerances& tol) {
  require_feasible(m, theta, tol);
  const Eigen::Index d = theta.size();
  const Matrix jac = model.dga_gradient(theta);
  const Matrix grad_g = m.constraint_jacobian(theta);
  const TangentFrame frame = tangent_frame_from_jacobian(theta, grad_g, tol);
  const Matrix& q = frame.tangent;
  const Matrix p = frame.projection();

  // (A' P A'^T)^+ = X S^{-2} X^T with X = A' Q and S = X^T X, so both trace
  // terms reduce to r x r products.
  const Matrix x = jac * q;
  const Matrix gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gram + gram.transpose()));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::PseudoinverseFailure, "eigendecomposition failed");
  }
  const Vector& lambda = es.eigenvalues();
  const double top = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  if (lambda.size() > 0 &&
      !(lambda.minCoeff() > 0.0 && std::sqrt(lambda.minCoeff()) > tol.rank_eps * std::sqrt(top))) {
    throw Error(ErrorKind::PseudoinverseFailure,
                "rank of the projected DGA gradient is below the manifold dimension");
  }
  const Matrix& v = es.eigenvectors();
  const Matrix s_inv = v * lambda.cwiseInverse().asDiagonal() * v.transpose();
  const Matrix s_inv2 = v * lambda.cwiseInverse().cwiseAbs2().asDiagonal() * v.transpose();
  const Matrix k = jac.transpose() * x;  // d x r

  Vector grad = model.log_likelihood_gradient(theta);
  const bool analytic_dp = m.has_jacobian_derivative();
  for (Eigen::Index i = 0; i < d; ++i) {
    const Matrix djac = model.dga_gradient_derivative(theta, static_cast<int>(i));
    const double jac_term = (s_inv * (x.transpose() * (djac * q))).trace();

    double proj_term = 0.0;
    if (grad_g.rows() > 0) {
      Matrix dp;
      if (analytic_dp) {
        dp = projection_derivative(grad_g, m.jacobian_derivative(theta, static_cast<int>(i)), p);
      } else {
        const double h = fd_step(theta(i));
        Vector plus = theta;
        Vector minus = theta;
        plus(i) += h;
        minus(i) -= h;
        dp = (projection_matrix(m, plus, tol) - projection_matrix(m, minus, tol)) /
             (plus(i) - minus(i));
      }
      proj_term = (s_inv2 * (k.transpose() * dp * k)).trace();
    }
    grad(i) += 0.5 * (2.0 * jac_term + proj_term);
  }
  return grad;
}

double parameterized_gfd_log_kernel(const FiducialModel& model, const Chart& chart,
                                    const Vector& u) {
  if (!chart.contains(u)) {
    throw Error(ErrorKind::OutOfDomain, "chart coordinates outside the chart domain");
  }
  const Vector theta = chart.to_ambient(u);
  const Matrix composed = model.dga_gradient(theta) * chart.to_ambient_jacobian(u);
  const double log_jac = require_finite_scale(log_gram_det_scale(composed),
                                              "reparameterized DGA gradient");
  return model.log_likelihood(theta) + log_jac;
}

double hwang_log_kernel(const FiducialModel& model, const ImplicitManifold& m,
                        const Vector& theta, const Tolerances& tol) {
  require_feasible(m, theta, tol);
  const Matrix grad_g = m.constraint_jacobian(theta);
  const double log_normal = log_gram_det_scale(grad_g.transpose());
  if (!std::isfinite(log_normal)) {
    throw Error(ErrorKind::RankDeficient, "constraint Jacobian is rank deficient");
  }
  return gfd_log_kernel(model, theta) - log_normal;
}

}  // namespace cgfd
