#include "cgfd/models/sphere.hpp"

#include <cmath>
#include <numbers>

namespace cgfd {

Vector UnitSphere::constraint(const Vector& mu) const {
  return Vector::Constant(1, mu.norm() - 1.0);
}

Matrix UnitSphere::constraint_jacobian(const Vector& mu) const {
  return (mu / mu.norm()).transpose();
}

Matrix UnitSphere::jacobian_derivative(const Vector& mu, int i) const {
  const double r = mu.norm();
  Vector row = -mu * (mu(i) / (r * r * r));
  row(i) += 1.0 / r;
  return row.transpose();
}

SphereMvnModel::SphereMvnModel(Matrix data) : data_(std::move(data)) {
  if (data_.rows() == 0 || data_.cols() == 0) {
    throw Error(ErrorKind::EmptyData, "sphere model needs at least one observation");
  }
  column_sums_ = data_.colwise().sum().transpose();
  sum_squares_ = data_.squaredNorm();
}

double SphereMvnModel::log_likelihood(const Vector& mu) const {
  const double n = static_cast<double>(data_.rows());
  const double k = static_cast<double>(data_.cols());
  // sum_i ||y_i - mu||^2 expanded around the sufficient statistics
  const double ss = sum_squares_ - 2.0 * column_sums_.dot(mu) + n * mu.squaredNorm();
  return -0.5 * ss - 0.5 * n * k * std::log(2.0 * std::numbers::pi);
}

Vector SphereMvnModel::log_likelihood_gradient(const Vector& mu) const {
  return column_sums_ - static_cast<double>(data_.rows()) * mu;
}

Matrix SphereMvnModel::dga_gradient(const Vector& mu) const {
  const Eigen::Index n = data_.rows();
  const Eigen::Index k = mu.size();
  Matrix stacked(n * k, k);
  for (Eigen::Index i = 0; i < n; ++i) stacked.middleRows(i * k, k).setIdentity();
  return stacked;
}

Matrix SphereMvnModel::dga_gradient_derivative(const Vector& mu, int) const {
  return Matrix::Zero(data_.rows() * mu.size(), mu.size());
}

ConstrainedModel sphere_model(const Matrix& data) {
  auto model = std::make_shared<const SphereMvnModel>(data);
  auto manifold = std::make_shared<const UnitSphere>(static_cast<int>(data.cols()));
  return {model, manifold};
}

}  // namespace cgfd
