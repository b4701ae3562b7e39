#include "doctest.h"
#include "support.hpp"

#include "cgfd/fiducial.hpp"
#include "cgfd/models/ar1.hpp"
#include "cgfd/models/bspline.hpp"
#include "cgfd/models/equal_means.hpp"
#include "cgfd/models/logspline.hpp"
#include "cgfd/models/sphere.hpp"

#include <cmath>

using namespace cgfd;
using namespace cgfd::test;

namespace {

constexpr int kPoints = 20;

std::shared_ptr<const LinearBSplineBasis> default_basis() {
  return std::make_shared<const LinearBSplineBasis>(default_logspline_knots());
}

Vector random_ar1_point(int n, Rng& rng) {
  const Vector base = ar1_initial_point(uniform(rng, -0.8, 0.8), uniform(rng, 0.5, 2.0), n);
  // Perturb off the manifold as well: derivative identities hold everywhere.
  return base + gaussian(base.size(), rng, 0.05);
}

// int_0^y exp(theta . B(t)) dt, one smooth piece at a time.
double spline_mass(const LinearBSplineBasis& basis, const Vector& theta, double y) {
  double total = 0.0;
  for (const auto& seg : basis.segments()) {
    const double end = std::min(seg.start + seg.width, y);
    if (end <= seg.start) break;
    total += integrate([&](double t) { return std::exp(theta.dot(basis.evaluate(t))); }, seg.start, end);
  }
  return total;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("segment moments against quadrature") {
    for (double beta : {-40.0, -3.0, -0.5, -1e-9, 0.0, 1e-7, 0.8, 5.0, 25.0}) {
      for (double h : {0.01, 0.15, 0.6}) {
        const auto e = exp_moments(beta, h);
        for (int k = 0; k < 3; ++k) {
          const double oracle =
              integrate([&](double t) { return std::pow(t, k) * std::exp(beta * t); }, 0.0, h);
          CHECK(rel_err(e[static_cast<std::size_t>(k)], oracle) < 1e-12 * std::max(1.0, 1.0 / oracle));
        }
      }
    }
  }

  TEST_CASE("linear B-spline basis") {
    const LinearBSplineBasis basis(default_logspline_knots());
    CHECK(basis.size() == 7);
    CHECK(basis.knots().front() == doctest::Approx(-0.15));
    CHECK(basis.knots()[1] == 0.0);
    // Hat j peaks at knot j + 1 with value one.
    for (int j = 0; j < basis.size(); ++j) {
      const Vector v = basis.evaluate(basis.knots()[static_cast<std::size_t>(j) + 1]);
      CHECK(v(j) == doctest::Approx(1.0));
      CHECK(v.sum() == doctest::Approx(1.0));
    }
    // Segment pieces reproduce the recursion.
    for (const auto& seg : basis.segments()) {
      for (double frac : {0.1, 0.5, 0.9}) {
        const double t = seg.start + frac * seg.width;
        const Vector v = basis.evaluate(t);
        Vector from_pieces = Vector::Zero(basis.size());
        for (const auto& piece : seg.pieces) from_pieces(piece.index) = piece.c0 + piece.c1 * (t - seg.start);
        CHECK((v - from_pieces).norm() < 1e-14);
      }
    }
    CHECK_THROWS_AS(LinearBSplineBasis({0.0, 0.5, 0.4, 1.0}), Error);
    CHECK_THROWS_AS(LinearBSplineBasis({0.1, 0.5, 1.2}), Error);
  }

  TEST_CASE("logspline constraint at zero and its gradient against quadrature") {
    auto basis = default_basis();
    const LogsplineConstraint g(basis);
    const double z0 = integrate([](double) { return std::exp(0.0); }, 0.0, 1.0);
    CHECK(g.constraint(Vector::Zero(7))(0) == doctest::Approx(std::log(z0)).epsilon(1e-15));
    CHECK(std::abs(g.constraint(Vector::Zero(7))(0)) < 1e-15);

    Rng rng = make_rng(1);
    for (int k = 0; k < kPoints; ++k) {
      const Vector theta = feasible_logspline(g, rng);
      CHECK(std::abs(g.constraint(theta)(0)) < 1e-10);
      const Matrix grad = g.constraint_jacobian(theta);
      for (int j = 0; j < 7; ++j) {
        double oracle = 0.0;
        for (const auto& seg : basis->segments()) {
          oracle += integrate([&](double t) { return basis->evaluate(t)(j) * std::exp(theta.dot(basis->evaluate(t))); },
                              seg.start, seg.start + seg.width);
        }
        CHECK(std::abs(grad(0, j) - oracle) < 1e-8);
      }
      // P = I - C^T C with C the normalized moment vector.
      const Vector c = grad.row(0).transpose().normalized();
      const Matrix p = Matrix::Identity(7, 7) - c * c.transpose();
      CHECK((projection_matrix(g, theta) - p).norm() < 1e-12);
    }
  }

  TEST_CASE("logspline derivatives against central differences") {
    auto basis = default_basis();
    const LogsplineConstraint g(basis);
    Rng rng = make_rng(2);
    const LogsplineModel model(basis, triangular_data(25, rng));
    for (int k = 0; k < kPoints; ++k) {
      const Vector theta = feasible_logspline(g, rng);
      CHECK(max_rel_err(g.constraint_jacobian(theta),
                        fd_jacobian([&](const Vector& x) { return g.constraint(x); }, theta)) < 1e-5);
      for (int i = 0; i < 7; ++i) {
        CHECK(max_rel_err(g.jacobian_derivative(theta, i),
                          fd_partial([&](const Vector& x) { return g.constraint_jacobian(x); }, theta, i)) < 1e-5);
        CHECK(max_rel_err(model.dga_gradient_derivative(theta, i),
                          fd_partial([&](const Vector& x) { return model.dga_gradient(x); }, theta, i)) < 1e-5);
      }
      const Vector score = model.log_likelihood_gradient(theta);
      const Vector fd = fd_gradient([&](const Vector& x) { return model.log_likelihood(x); }, theta);
      CHECK((score - fd).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("logspline DGA gradient is the quantile derivative on the tangent space") {
    auto basis = default_basis();
    const LogsplineConstraint g(basis);
    Rng rng = make_rng(3);
    const std::vector<double> y = triangular_data(12, rng);
    const LogsplineModel model(basis, y);
    for (int k = 0; k < kPoints; ++k) {
      const Vector theta = feasible_logspline(g, rng);
      // u_i = F_theta(y_i) by quadrature.
      const double z = spline_mass(*basis, theta, 1.0);
      std::vector<double> u;
      for (double yi : y) u.push_back(spline_mass(*basis, theta, yi) / z);
      const Matrix fd = fd_jacobian(
          [&](const Vector& x) {
            Vector out(static_cast<Eigen::Index>(u.size()));
            for (std::size_t i = 0; i < u.size(); ++i) out(static_cast<Eigen::Index>(i)) = logspline_quantile(*basis, x, u[i]);
            return out;
          },
          theta);
      const Matrix q = tangent_frame(g, theta).tangent;
      CHECK(max_rel_err(model.dga_gradient(theta) * q, fd * q) < 1e-6);
    }
  }

  TEST_CASE("logspline density, quantile and data checks") {
    auto basis = default_basis();
    const LogsplineConstraint g(basis);
    Rng rng = make_rng(4);
    for (int k = 0; k < 5; ++k) {
      const Vector theta = feasible_logspline(g, rng);
      const double total = spline_mass(*basis, theta, 1.0);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      for (double t : {0.05, 0.5, 0.93}) {
        CHECK(logspline_pdf(*basis, theta, t) == doctest::Approx(std::exp(theta.dot(basis->evaluate(t))) / total).epsilon(1e-12));
      }
      for (double u : {0.01, 0.3, 0.77, 0.99}) {
        const double x = logspline_quantile(*basis, theta, u);
        CHECK(spline_mass(*basis, theta, x) / total == doctest::Approx(u).epsilon(1e-9));
      }
      const Vector kv = logspline_knot_values(*basis, theta);
      const auto knots = basis->knots_in_unit_interval();
      REQUIRE(kv.size() == static_cast<Eigen::Index>(knots.size()));
      for (std::size_t i = 0; i < knots.size(); ++i) {
        CHECK(kv(static_cast<Eigen::Index>(i)) == doctest::Approx(logspline_pdf(*basis, theta, knots[i])).epsilon(1e-9));
      }
    }
    CHECK_THROWS_AS(LogsplineModel(basis, {0.2, 1.5}), Error);
    CHECK_THROWS_AS(LogsplineModel(basis, {}), Error);
  }

  TEST_CASE("triangular law and KL-optimal fit") {
    const TriangularDistribution tri;
    CHECK(integrate([&](double t) { return tri.pdf(t); }, 0.0, 0.2) +
              integrate([&](double t) { return tri.pdf(t); }, 0.2, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tri.pdf(0.2) == doctest::Approx(2.0));
    for (double u : {0.05, 0.2, 0.5, 0.95}) CHECK(tri.cdf(tri.quantile(u)) == doctest::Approx(u).epsilon(1e-14));

    auto basis = default_basis();
    const Vector target = expected_basis(*basis, [&](double t) { return tri.pdf(t); }, {tri.mode});
    for (int j = 0; j < 7; ++j) {
      const double oracle =
          integrate([&](double t) { return basis->evaluate(t)(j) * tri.pdf(t); }, 0.0, 0.2) +
          integrate([&](double t) { return basis->evaluate(t)(j) * tri.pdf(t); }, 0.2, 1.0);
      CHECK(target(j) == doctest::Approx(oracle).epsilon(1e-10));
    }
    const Vector theta = fit_logspline(*basis, target);
    const LogsplineConstraint g(basis);
    CHECK(std::abs(g.constraint(theta)(0)) < 1e-10);
    // Stationarity: the target is normal to the manifold at the optimum.
    const Matrix q = tangent_frame(g, theta).tangent;
    CHECK((q.transpose() * target).norm() < 1e-9);
  }

  TEST_CASE("sphere model derivatives and shape") {
    Rng rng = make_rng(5);
    const Matrix y = sphere_data(Vector::Unit(3, 0), 4, rng);
    const SphereMvnModel model(y);
    const Vector mu = gaussian(3, rng).normalized();
    Matrix stacked(12, 3);
    for (int i = 0; i < 4; ++i) stacked.block(3 * i, 0, 3, 3).setIdentity();
    CHECK(model.dga_gradient(mu) == stacked);
    CHECK(model.dga_gradient_derivative(mu, 1).norm() == 0.0);
    const Vector fd = fd_gradient([&](const Vector& x) { return model.log_likelihood(x); }, mu);
    CHECK((model.log_likelihood_gradient(mu) - fd).norm() < 1e-6);

    // A single observation at (1, 0, 0) puts the kernel mode there.
    Matrix one(1, 3);
    one << 1.0, 0.0, 0.0;
    const ConstrainedModel cm = sphere_model(one);
    const double at_mode = cgfd_log_kernel(*cm.model, *cm.manifold, Vector::Unit(3, 0));
    for (int k = 0; k < 20; ++k) {
      const Vector other = gaussian(3, rng).normalized();
      CHECK(cgfd_log_kernel(*cm.model, *cm.manifold, other) <= at_mode);
    }
    CHECK_THROWS_AS(sphere_model(Matrix(0, 3)), Error);
  }

  TEST_CASE("equal-means derivatives and shape") {
    Rng rng = make_rng(6);
    Matrix data(2, 2);
    data << 0.3, -1.1, 1.7, 0.4;
    const EqualMeansModel model(data);
    for (int k = 0; k < kPoints; ++k) {
      Vector theta(4);
      theta << uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0.3, 3), uniform(rng, 0.3, 3);
      const Vector fd = fd_gradient([&](const Vector& x) { return model.log_likelihood(x); }, theta);
      CHECK((model.log_likelihood_gradient(theta) - fd).cwiseAbs().maxCoeff() < 1e-6);
      for (int i = 0; i < 4; ++i) {
        CHECK(max_rel_err(model.dga_gradient_derivative(theta, i),
                          fd_partial([&](const Vector& x) { return model.dga_gradient(x); }, theta, i)) < 1e-6);
      }
      for (auto form : {EqualMeansConstraint::Form::Linear, EqualMeansConstraint::Form::Cubic}) {
        const EqualMeansConstraint g(form);
        CHECK(max_rel_err(g.constraint_jacobian(theta),
                          fd_jacobian([&](const Vector& x) { return g.constraint(x); }, theta)) < 1e-6);
        for (int i = 0; i < 4; ++i) {
          CHECK(max_rel_err(g.jacobian_derivative(theta, i),
                            fd_partial([&](const Vector& x) { return g.constraint_jacobian(x); }, theta, i)) < 1e-6);
        }
      }
    }
    const EqualMeansChart chart;
    Vector u(3);
    u << 0.5, 1.0, 2.0;
    CHECK(max_rel_err(chart.to_ambient_jacobian(u),
                      fd_jacobian([&](const Vector& x) { return chart.to_ambient(x); }, u)) < 1e-9);
    CHECK_THROWS_AS(EqualMeansModel(Matrix(3, 2)), Error);
  }

  TEST_CASE("Cayley covariance derivatives") {
    Rng rng = make_rng(7);
    for (int n : {3, 5, 10}) {
      for (int k = 0; k < kPoints; ++k) {
        const Vector theta = random_ar1_point(n, rng);
        const auto dcov = ar1_covariance_derivatives(theta, n);
        REQUIRE(static_cast<int>(dcov.size()) == ar1_param_dim(n));
        for (int i = 0; i < ar1_param_dim(n); ++i) {
          const Matrix fd = fd_partial([&](const Vector& x) { return ar1_covariance(x, n); }, theta, i);
          CHECK(max_rel_err(dcov[static_cast<std::size_t>(i)], fd) < 1e-5);
        }
      }
    }
  }

  TEST_CASE("Cayley differential") {
    // dC = -2 L dA L with L = (I + A)^{-1}.
    Rng rng = make_rng(8);
    const int n = 4;
    const Vector theta = random_ar1_point(n, rng);
    const CayleyParams p = ar1_unpack(theta, n);
    const Matrix l = (Matrix::Identity(n, n) + p.a).inverse();
    Matrix da = Matrix::Zero(n, n);
    da(0, 2) = 1.0;
    da(2, 0) = -1.0;
    const Matrix dc = -2.0 * l * da * l;
    const double h = 1e-6;
    const Matrix fd = (cayley(p.a + h * da) - cayley(p.a - h * da)) / (2.0 * h);
    CHECK(max_rel_err(dc, fd) < 1e-8);
  }

  TEST_CASE("AR(1) constraint Jacobian and white-noise corner") {
    Rng rng = make_rng(9);
    for (int n : {3, 6, 10}) {
      const Ar1Constraint g(n);
      CHECK(g.codim() == n * (n + 1) / 2 - 2);
      CHECK(g.intrinsic_dim() == 2);
      for (int k = 0; k < kPoints; ++k) {
        const Vector theta = random_ar1_point(n, rng);
        CHECK(max_rel_err(g.constraint_jacobian(theta),
                          fd_jacobian([&](const Vector& x) { return g.constraint(x); }, theta)) < 1e-5);
      }
      const Vector white = ar1_pack(Matrix::Zero(n, n), Vector::Constant(n, 1.7));
      CHECK(g.constraint(white).norm() < 1e-14);
      CHECK((ar1_covariance(white, n) - 1.7 * 1.7 * Matrix::Identity(n, n)).norm() < 1e-14);
    }
  }

  TEST_CASE("AR(1) initial point and functionals") {
    for (double rho : {-0.6, 0.0, 0.5, 0.9}) {
      const Vector theta = ar1_initial_point(rho, 1.3, 10);
      const Matrix cov = ar1_covariance(theta, 10);
      CHECK((cov - ar1_stationary_covariance(rho, 1.3, 10)).norm() < 1e-9);
      CHECK(ar1_rho(cov) == doctest::Approx(rho).epsilon(1e-10));
      CHECK(ar1_sigma(cov) == doctest::Approx(1.3).epsilon(1e-10));
      CHECK(Ar1Constraint(10).constraint(theta).norm() < 1e-9);
      const CayleyParams p = ar1_unpack(theta, 10);
      CHECK(p.lambda.minCoeff() > 0.0);
    }
    CHECK_THROWS_AS(ar1_stationary_covariance(1.0, 1.0, 4), Error);

    CHECK_THROWS_AS(cayley(-Matrix::Identity(3, 3)), Error);
  }

  TEST_CASE("AR(1) likelihood and DGA gradient") {
    Rng rng = make_rng(10);
    const int n = 6;
    const std::vector<double> x = simulate_ar1(0.5, 1.0, n, rng);
    const Ar1Model model(x);
    const Vector xv = Eigen::Map<const Vector>(x.data(), n);
    for (int k = 0; k < kPoints; ++k) {
      const Vector theta = ar1_initial_point(uniform(rng, -0.7, 0.7), uniform(rng, 0.5, 2.0), n);
      const Matrix cov = ar1_covariance(theta, n);
      const double oracle = -0.5 * xv.dot(cov.ldlt().solve(xv)) - 0.5 * std::log(cov.determinant()) -
                            0.5 * n * std::log(2.0 * M_PI);
      CHECK(model.log_likelihood(theta) == doctest::Approx(oracle).epsilon(1e-10));

      // X = C Lambda Z with Z held at its inverted value.
      const CayleyParams p = ar1_unpack(theta, n);
      const Vector z = (cayley(p.a) * p.lambda.asDiagonal()).lu().solve(xv);
      const Matrix fd = fd_jacobian(
          [&](const Vector& t) {
            const CayleyParams q = ar1_unpack(t, n);
            return Vector(cayley(q.a) * q.lambda.asDiagonal() * z);
          },
          theta);
      CHECK(max_rel_err(model.dga_gradient(theta), fd) < 1e-5);
    }
    Vector bad = ar1_initial_point(0.5, 1.0, n);
    bad(bad.size() - 1) = -1.0;
    CHECK(std::isinf(model.log_likelihood(bad)));
    CHECK_THROWS_AS(Ar1Model({1.0, 2.0}), Error);
  }
}
