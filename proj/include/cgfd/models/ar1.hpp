#pragma once

#include "cgfd/models/model.hpp"

#include <random>
#include <vector>

namespace cgfd {

/// Parameter layout for the Cayley-transform covariance model of size n:
/// the n(n-1)/2 free entries A_qr (q < r, row-major) of a skew-symmetric A,
/// followed by the n diagonal entries of Lambda.
int ar1_param_dim(int n);

struct CayleyParams {
  Matrix a;       // skew-symmetric
  Vector lambda;  // diagonal of Lambda
};

CayleyParams ar1_unpack(const Vector& theta, int n);
Vector ar1_pack(const Matrix& a, const Vector& lambda);

/// C = (I - A)(I + A)^{-1}. Throws CayleySingular if I + A is singular.
Matrix cayley(const Matrix& a);

/// Sigma = C Lambda^2 C^T.
Matrix ar1_covariance(const Vector& theta, int n);
/// dSigma/dtheta_i for every coordinate, in parameter order.
std::vector<Matrix> ar1_covariance_derivatives(const Vector& theta, int n);

/// Stationary AR(1) covariance sigma^2/(1 - rho^2) rho^{|i-j|}.
Matrix ar1_stationary_covariance(double rho, double sigma, int n);
/// rho = Sigma_12 / Sigma_11.
double ar1_rho(const Matrix& sigma_matrix);
/// sigma = sqrt(Sigma_11 (1 - rho^2)).
double ar1_sigma(const Matrix& sigma_matrix);

/// A point (A, Lambda) whose covariance is the stationary AR(1) covariance.
/// Eigenvector signs are chosen to keep the entries of A small.
Vector ar1_initial_point(double rho, double sigma, int n);

template <class Rng>
std::vector<double> simulate_ar1(double rho, double sigma, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  x[0] = sigma / std::sqrt(1.0 - rho * rho) * normal(rng);
  for (int t = 1; t < n; ++t) x[t] = rho * x[t - 1] + sigma * normal(rng);
  return x;
}

/// X = C Lambda Z with Z standard normal; one realization of length n.
/// Points with Lambda not strictly positive or A outside [-1, 1] have zero
/// density.
class Ar1Model final : public FiducialModel {
 public:
  explicit Ar1Model(std::vector<double> data);

  int series_length() const { return static_cast<int>(data_.size()); }
  int param_dim() const override { return ar1_param_dim(series_length()); }

  double log_likelihood(const Vector& theta) const override;
  Matrix dga_gradient(const Vector& theta) const override;

 private:
  std::vector<double> data_;
  Vector x_;
};

/// Toeplitz differences Sigma_ij - Sigma_{i+1,j+1} (i <= j <= n-1) and
/// geometric-decay terms Sigma_{1,k+1}^2 - Sigma_{1,k} Sigma_{1,k+2}, applied to
/// Sigma(A, Lambda).
class Ar1Constraint final : public ImplicitManifold {
 public:
  explicit Ar1Constraint(int n);

  int ambient_dim() const override { return ar1_param_dim(n_); }
  int codim() const override { return n_ * (n_ + 1) / 2 - 2; }
  Vector constraint(const Vector& theta) const override;
  Matrix constraint_jacobian(const Vector& theta) const override;

 private:
  int n_;
};

ConstrainedModel ar1_model(const std::vector<double>& data);

}  // namespace cgfd
