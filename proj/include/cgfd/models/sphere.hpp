#pragma once

#include "cgfd/models/model.hpp"

namespace cgfd {

/// Unit sphere S^{k-1} in R^k, g(mu) = ||mu|| - 1.
class UnitSphere final : public ImplicitManifold {
 public:
  explicit UnitSphere(int dim) : dim_(dim) {}

  int ambient_dim() const override { return dim_; }
  int codim() const override { return 1; }
  Vector constraint(const Vector& mu) const override;
  Matrix constraint_jacobian(const Vector& mu) const override;
  bool has_jacobian_derivative() const override { return true; }
  Matrix jacobian_derivative(const Vector& mu, int i) const override;

 private:
  int dim_;
};

/// Observations y_1..y_n ~ N_k(mu, I_k) with DGA y_i = mu + z_i.
/// Rows of the data matrix are observations; k = 3 is the sphere example and
/// k = 2 gives a circle.
class SphereMvnModel final : public FiducialModel {
 public:
  explicit SphereMvnModel(Matrix data);

  int param_dim() const override { return static_cast<int>(data_.cols()); }
  int sample_size() const { return static_cast<int>(data_.rows()); }
  const Matrix& data() const { return data_; }

  double log_likelihood(const Vector& mu) const override;
  Vector log_likelihood_gradient(const Vector& mu) const override;
  Matrix dga_gradient(const Vector& mu) const override;
  Matrix dga_gradient_derivative(const Vector& mu, int i) const override;

 private:
  Matrix data_;
  Vector column_sums_;
  double sum_squares_ = 0.0;
};

ConstrainedModel sphere_model(const Matrix& data);

}  // namespace cgfd
