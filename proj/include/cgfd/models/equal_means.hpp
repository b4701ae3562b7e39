#pragma once

#include "cgfd/models/model.hpp"

namespace cgfd {

/// Two bivariate observations X_i = mu + diag(sigma1, sigma2) Z_i with
/// theta = (mu1, mu2, sigma1, sigma2). Data rows are observations.
class EqualMeansModel final : public FiducialModel {
 public:
  explicit EqualMeansModel(Matrix data);

  int param_dim() const override { return 4; }
  const Matrix& data() const { return data_; }

  double log_likelihood(const Vector& theta) const override;
  Vector log_likelihood_gradient(const Vector& theta) const override;
  Matrix dga_gradient(const Vector& theta) const override;
  Matrix dga_gradient_derivative(const Vector& theta, int i) const override;

 private:
  Matrix data_;
};

/// Two constraint functions with the same zero set {mu1 = mu2}:
/// Linear g = mu2 - mu1 and Cubic h = mu2^3 - mu1^3.
class EqualMeansConstraint final : public ImplicitManifold {
 public:
  enum class Form { Linear, Cubic };

  explicit EqualMeansConstraint(Form form) : form_(form) {}

  int ambient_dim() const override { return 4; }
  int codim() const override { return 1; }
  Vector constraint(const Vector& theta) const override;
  Matrix constraint_jacobian(const Vector& theta) const override;
  bool has_jacobian_derivative() const override { return true; }
  Matrix jacobian_derivative(const Vector& theta, int i) const override;

 private:
  Form form_;
};

/// (mu, sigma1, sigma2) -> (mu, mu, sigma1, sigma2).
class EqualMeansChart final : public Chart {
 public:
  EqualMeansChart(double mu_bound = 1e6, double sigma_max = 1e6);

  int intrinsic_dim() const override { return 3; }
  int ambient_dim() const override { return 4; }
  Vector to_ambient(const Vector& u) const override;
  Matrix to_ambient_jacobian(const Vector& u) const override;
  Vector lower() const override;
  Vector upper() const override;

 private:
  double mu_bound_;
  double sigma_max_;
};

/// The 3-parameter model obtained by substituting mu1 = mu2 = mu directly into
/// the DGA; its gradient is the 4 x 3 matrix J_2.
class EqualMeansDirectModel final : public FiducialModel {
 public:
  explicit EqualMeansDirectModel(Matrix data);

  int param_dim() const override { return 3; }
  double log_likelihood(const Vector& u) const override;
  Matrix dga_gradient(const Vector& u) const override;

 private:
  EqualMeansModel full_;
};

ConstrainedModel equal_means_model(
    const Matrix& data, EqualMeansConstraint::Form form = EqualMeansConstraint::Form::Linear);

}  // namespace cgfd
