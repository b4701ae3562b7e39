#pragma once

#include "cgfd/geometry.hpp"
#include "cgfd/models/logspline.hpp"
#include "cgfd/models/sphere.hpp"
#include "cgfd/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

namespace cgfd::test {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline double max_rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

inline Vector gaussian(Eigen::Index n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double fd_step(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

/// Central differences of a matrix-valued map along coordinate i.
inline Matrix fd_partial(const std::function<Matrix(const Vector&)>& f, const Vector& x, int i) {
  const double h = fd_step(x(i));
  Vector xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

/// Jacobian of a vector map by central differences, one column per coordinate.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    jac.col(i) = fd_partial([&](const Vector& y) -> Matrix { return f(y); }, x, static_cast<int>(i));
  }
  return jac;
}

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  return fd_jacobian([&](const Vector& y) { return Vector::Constant(1, f(y)); }, x).transpose();
}

/// Null space of G from the full SVD, independent of the QR route.
inline Matrix svd_null_space(const Matrix& g) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(g.cols() - g.rows());
}

/// Principal-angle distance between the column spaces of two orthonormal bases.
inline double subspace_distance(const Matrix& a, const Matrix& b) {
  return (a * a.transpose() - b * b.transpose()).norm();
}

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// Random point of the logspline manifold: a Gaussian draw shifted along the
/// all-ones direction until g = 0.
inline Vector feasible_logspline(const LogsplineConstraint& m, Rng& rng, double scale = 0.7) {
  const Vector raw = gaussian(m.ambient_dim(), rng, scale);
  const Projection p = project_along(m, raw, Matrix::Ones(m.ambient_dim(), 1));
  if (!p.ok()) throw std::runtime_error("logspline point did not project");
  return p.point;
}

inline std::vector<double> triangular_data(int n, Rng& rng) {
  const TriangularDistribution tri;
  std::vector<double> y;
  while (static_cast<int>(y.size()) < n) {
    const double v = tri.sample(rng);
    if (v > 0.0 && v < 1.0) y.push_back(v);
  }
  return y;
}

/// n rows of N_3(mu, I).
inline Matrix sphere_data(const Vector& mu, int n, Rng& rng) {
  Matrix y(n, mu.size());
  for (int i = 0; i < n; ++i) y.row(i) = (mu + gaussian(mu.size(), rng)).transpose();
  return y;
}

/// Tangential directional derivatives of f at a feasible x: f is followed
/// along the curve h -> projection of x + h q_j back to M.
inline Vector tangential_fd(const ImplicitManifold& m, const std::function<double(const Vector&)>& f,
                            const Vector& x, double h = 1e-5) {
  const TangentFrame frame = tangent_frame(m, x);
  Vector out(frame.tangent.cols());
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    const Projection plus = project_to_manifold(m, x + h * frame.tangent.col(j), frame);
    const Projection minus = project_to_manifold(m, x - h * frame.tangent.col(j), frame);
    if (!plus.ok() || !minus.ok()) throw std::runtime_error("tangential step did not project");
    out(j) = (f(plus.point) - f(minus.point)) / (2.0 * h);
  }
  return out;
}

/// Star-shaped closed curve r(phi) = 1 + amp cos(lobes phi) in the plane,
/// g(x) = |x| - r(atan2(x2, x1)). Non-convex for amp = 0.2, lobes = 5.
struct Flower {
  double amp = 0.2;
  int lobes = 5;

  double radius(double phi) const { return 1.0 + amp * std::cos(lobes * phi); }
  double radius_prime(double phi) const { return -amp * lobes * std::sin(lobes * phi); }

  std::shared_ptr<const ImplicitManifold> manifold() const {
    const Flower f = *this;
    return std::make_shared<FunctionManifold>(
        2, 1,
        [f](const Vector& x) {
          return Vector::Constant(1, x.norm() - f.radius(std::atan2(x(1), x(0))));
        },
        [f](const Vector& x) {
          const double phi = std::atan2(x(1), x(0));
          const double q = x.squaredNorm();
          const double r = x.norm();
          Matrix j(1, 2);
          j << x(0) / r + f.radius_prime(phi) * x(1) / q, x(1) / r - f.radius_prime(phi) * x(0) / q;
          return j;
        });
  }

  /// Density in phi of exp(x1) restricted to the curve with its arc length.
  double angular_density(double phi) const {
    const double r = radius(phi);
    const double rp = radius_prime(phi);
    return std::exp(r * std::cos(phi)) * std::sqrt(r * r + rp * rp);
  }
};

/// CDF in angle of an unnormalized density on [-pi, pi], by adaptive quadrature.
class AngularCdf {
 public:
  explicit AngularCdf(std::function<double(double)> density, int pieces = 256)
      : density_(std::move(density)), pieces_(pieces) {
    const double w = 2.0 * M_PI / pieces_;
    cumulative_.push_back(0.0);
    for (int k = 0; k < pieces_; ++k) {
      const double a = -M_PI + k * w;
      cumulative_.push_back(cumulative_.back() + integrate(density_, a, a + w));
    }
  }

  double total() const { return cumulative_.back(); }

  double operator()(double phi) const {
    if (phi <= -M_PI) return 0.0;
    if (phi >= M_PI) return 1.0;
    const double w = 2.0 * M_PI / pieces_;
    const int k = std::min(pieces_ - 1, static_cast<int>((phi + M_PI) / w));
    const double a = -M_PI + k * w;
    return (cumulative_[static_cast<std::size_t>(k)] + integrate(density_, a, phi)) / total();
  }

 private:
  std::function<double(double)> density_;
  int pieces_;
  std::vector<double> cumulative_;
};

}  // namespace cgfd::test
