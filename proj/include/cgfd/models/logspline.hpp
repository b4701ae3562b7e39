#pragma once

#include "cgfd/models/bspline.hpp"
#include "cgfd/models/model.hpp"

#include <functional>
#include <memory>
#include <random>

namespace cgfd {

/// Closed-form integrals of exp(s) with s = theta . B over [0, 1].
struct LogsplineIntegrals {
  double normalizer = 0.0;  // Z = int exp(s)
  Vector first;             // m_j = int B_j exp(s)
  Matrix second;            // M_jk = int B_j B_k exp(s); empty unless requested
};

LogsplineIntegrals logspline_integrals(const LinearBSplineBasis& basis, const Vector& theta,
                                       bool with_second = false);

/// exp(s(t)) / Z for t in [0, 1].
double logspline_pdf(const LinearBSplineBasis& basis, const Vector& theta, double t);
/// Inverse CDF by per-segment closed-form inversion.
double logspline_quantile(const LinearBSplineBasis& basis, const Vector& theta, double u);
/// Unnormalized density exp(s(kappa)) at each knot lying in [0, 1].
Vector logspline_knot_values(const LinearBSplineBasis& basis, const Vector& theta);

/// f(y|theta) = exp(theta . B(y)) / Z(theta) with the quantile-transform DGA.
/// On the feasible set Z = 1 and this is the plain exponential form.
class LogsplineModel final : public FiducialModel {
 public:
  LogsplineModel(std::shared_ptr<const LinearBSplineBasis> basis, std::vector<double> data);

  int param_dim() const override { return basis_->size(); }
  const LinearBSplineBasis& basis() const { return *basis_; }
  const std::vector<double>& data() const { return data_; }
  /// sum_i B(y_i) / n.
  Vector mean_basis() const { return basis_sum_ / static_cast<double>(data_.size()); }

  double log_likelihood(const Vector& theta) const override;
  Vector log_likelihood_gradient(const Vector& theta) const override;
  /// Row i, column j: -int_0^{y_i} B_j exp(s) / exp(s(y_i)).
  Matrix dga_gradient(const Vector& theta) const override;
  Matrix dga_gradient_derivative(const Vector& theta, int k) const override;

 private:
  struct Point {
    int segment;
    double offset;  // y - segment start
  };

  std::shared_ptr<const LinearBSplineBasis> basis_;
  std::vector<double> data_;
  std::vector<Point> points_;
  Matrix basis_at_data_;  // n x d
  Vector basis_sum_;
};

/// g(theta) = log int_0^1 exp(theta . B).
class LogsplineConstraint final : public ImplicitManifold {
 public:
  explicit LogsplineConstraint(std::shared_ptr<const LinearBSplineBasis> basis)
      : basis_(std::move(basis)) {}

  int ambient_dim() const override { return basis_->size(); }
  int codim() const override { return 1; }
  Vector constraint(const Vector& theta) const override;
  Matrix constraint_jacobian(const Vector& theta) const override;
  bool has_jacobian_derivative() const override { return true; }
  Matrix jacobian_derivative(const Vector& theta, int i) const override;

 private:
  std::shared_ptr<const LinearBSplineBasis> basis_;
};

ConstrainedModel logspline_model(const std::vector<double>& data,
                                 const std::vector<double>& knots = default_logspline_knots());

/// Feasible theta maximizing theta . target, i.e. the member of the family
/// minimizing KL(p || f_theta) when target = E_p[B]. With the empirical mean of
/// B this is the constrained MLE. Projected gradient ascent, Newton-scaled in
/// the tangent space.
Vector fit_logspline(const LinearBSplineBasis& basis, const Vector& target,
                     const Tolerances& tol = {});

/// E_p[B_j] for a density p on [0, 1] that is polynomial of degree <= 3
/// between the knots and the given extra breakpoints (exact Gauss-Legendre).
Vector expected_basis(const LinearBSplineBasis& basis, const std::function<double(double)>& pdf,
                      const std::vector<double>& extra_breaks = {});

struct TriangularDistribution {
  double lower = 0.0;
  double mode = 0.2;
  double upper = 1.0;

  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  template <class Rng>
  double sample(Rng& rng) const {
    return quantile(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  }
};

}  // namespace cgfd
