#include "cgfd/models/equal_means.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace cgfd {

namespace {

Vector lift(const Vector& u) {
  Vector theta(4);
  theta << u(0), u(0), u(1), u(2);
  return theta;
}

}  // namespace

EqualMeansModel::EqualMeansModel(Matrix data) : data_(std::move(data)) {
  if (data_.rows() != 2 || data_.cols() != 2) {
    throw Error(ErrorKind::BadShape, "equal-means model takes exactly two bivariate observations");
  }
}

double EqualMeansModel::log_likelihood(const Vector& theta) const {
  if (!(theta(2) > 0.0 && theta(3) > 0.0)) return -std::numeric_limits<double>::infinity();
  double total = -2.0 * std::log(2.0 * std::numbers::pi);
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double z = (data_(i, c) - theta(c)) / theta(2 + c);
      total += -0.5 * z * z - std::log(theta(2 + c));
    }
  }
  return total;
}

Vector EqualMeansModel::log_likelihood_gradient(const Vector& theta) const {
  Vector grad = Vector::Zero(4);
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double sigma = theta(2 + c);
      const double z = (data_(i, c) - theta(c)) / sigma;
      grad(c) += z / sigma;
      grad(2 + c) += (z * z - 1.0) / sigma;
    }
  }
  return grad;
}

// Row 2*i + c holds d X_{i,c} / d theta.
Matrix EqualMeansModel::dga_gradient(const Vector& theta) const {
  Matrix jac = Matrix::Zero(4, 4);
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 2; ++c) {
      jac(2 * i + c, c) = 1.0;
      jac(2 * i + c, 2 + c) = (data_(i, c) - theta(c)) / theta(2 + c);
    }
  }
  return jac;
}

Matrix EqualMeansModel::dga_gradient_derivative(const Vector& theta, int k) const {
  Matrix djac = Matrix::Zero(4, 4);
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double sigma = theta(2 + c);
      if (k == c) djac(2 * i + c, 2 + c) = -1.0 / sigma;
      if (k == 2 + c) djac(2 * i + c, 2 + c) = -(data_(i, c) - theta(c)) / (sigma * sigma);
    }
  }
  return djac;
}

Vector EqualMeansConstraint::constraint(const Vector& theta) const {
  const double a = theta(0);
  const double b = theta(1);
  return Vector::Constant(1, form_ == Form::Linear ? b - a : b * b * b - a * a * a);
}

Matrix EqualMeansConstraint::constraint_jacobian(const Vector& theta) const {
  Matrix jac = Matrix::Zero(1, 4);
  if (form_ == Form::Linear) {
    jac(0, 0) = -1.0;
    jac(0, 1) = 1.0;
  } else {
    jac(0, 0) = -3.0 * theta(0) * theta(0);
    jac(0, 1) = 3.0 * theta(1) * theta(1);
  }
  return jac;
}

Matrix EqualMeansConstraint::jacobian_derivative(const Vector& theta, int i) const {
  Matrix djac = Matrix::Zero(1, 4);
  if (form_ == Form::Cubic) {
    if (i == 0) djac(0, 0) = -6.0 * theta(0);
    if (i == 1) djac(0, 1) = 6.0 * theta(1);
  }
  return djac;
}

EqualMeansChart::EqualMeansChart(double mu_bound, double sigma_max)
    : mu_bound_(mu_bound), sigma_max_(sigma_max) {}

Vector EqualMeansChart::to_ambient(const Vector& u) const { return lift(u); }

Matrix EqualMeansChart::to_ambient_jacobian(const Vector&) const {
  Matrix jac = Matrix::Zero(4, 3);
  jac(0, 0) = 1.0;
  jac(1, 0) = 1.0;
  jac(2, 1) = 1.0;
  jac(3, 2) = 1.0;
  return jac;
}

Vector EqualMeansChart::lower() const {
  Vector lo(3);
  lo << -mu_bound_, std::numeric_limits<double>::min(), std::numeric_limits<double>::min();
  return lo;
}

Vector EqualMeansChart::upper() const {
  Vector hi(3);
  hi << mu_bound_, sigma_max_, sigma_max_;
  return hi;
}

EqualMeansDirectModel::EqualMeansDirectModel(Matrix data) : full_(std::move(data)) {}

double EqualMeansDirectModel::log_likelihood(const Vector& u) const {
  return full_.log_likelihood(lift(u));
}

Matrix EqualMeansDirectModel::dga_gradient(const Vector& u) const {
  const Matrix j1 = full_.dga_gradient(lift(u));
  Matrix j2(4, 3);
  j2.col(0) = j1.col(0) + j1.col(1);
  j2.col(1) = j1.col(2);
  j2.col(2) = j1.col(3);
  return j2;
}

ConstrainedModel equal_means_model(const Matrix& data, EqualMeansConstraint::Form form) {
  return {std::make_shared<const EqualMeansModel>(data),
          std::make_shared<const EqualMeansConstraint>(form)};
}

}  // namespace cgfd
