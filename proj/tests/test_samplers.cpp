#include "doctest.h"
#include "support.hpp"

#include "cgfd/models/ar1.hpp"
#include "cgfd/models/logspline.hpp"
#include "cgfd/models/sphere.hpp"
#include "cgfd/samplers.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>

using namespace cgfd;
using namespace cgfd::test;

namespace {

std::shared_ptr<const ImplicitManifold> circle() { return std::make_shared<UnitSphere>(2); }

FunctionTarget uniform_circle() {
  return FunctionTarget(circle(), [](const Vector&) { return 0.0; },
                        [](const Vector&) { return Vector(Vector::Zero(2)); });
}

double chi_square_p_value(const Matrix& samples, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const double phi = std::atan2(samples(i, 1), samples(i, 0));
    int b = static_cast<int>((phi + M_PI) / (2.0 * M_PI) * bins);
    counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
  }
  const double expected = static_cast<double>(samples.rows()) / bins;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(bins - 1), stat));
}

Vector e1() { return Vector::Unit(2, 0); }

}  // namespace

TEST_SUITE("samplers") {
  TEST_CASE("uniform law on the circle") {
    const FunctionTarget target = uniform_circle();
    MhConfig mh = default_mh_config(1);
    mh.seed = 3;
    const ChainResult mh_run = run_chain(target, e1(), mh, {100000, 0, 10});
    CHECK(chi_square_p_value(mh_run.samples, 36) > 0.01);

    HmcConfig hmc = default_hmc_config(2);
    hmc.seed = 3;
    const ChainResult hmc_run = run_chain(target, e1(), hmc, {10000, 0, 1});
    CHECK(chi_square_p_value(hmc_run.samples, 36) > 0.01);
    CHECK(hmc_run.diagnostics.max_abs_drift <= 1e-8);
    CHECK(mh_run.diagnostics.max_abs_drift <= 1e-8);
  }

  TEST_CASE("zero leapfrog steps accept without moving") {
    const FunctionTarget target = uniform_circle();
    HmcConfig cfg;
    cfg.n_leapfrog = 0;
    Rng rng = make_rng(1);
    ChainState s = make_chain_state(target, e1());
    for (int i = 0; i < 10; ++i) s = hmc_step(std::move(s), target, cfg, rng);
    CHECK(s.theta == e1());
    CHECK(s.stats.accepts == 10);
    CHECK(s.stats.proposals == 10);
  }

  TEST_CASE("tiny tangent steps are always accepted") {
    Rng rng = make_rng(2);
    const ConstrainedModel cm = sphere_model(sphere_data(Vector::Unit(3, 2), 5, rng));
    const CgfdTarget target(cm);
    MhConfig cfg;
    cfg.tangent_scale = 1e-9;
    ChainState s = make_chain_state(target, Vector::Unit(3, 2));
    const Vector start = s.theta;
    for (int i = 0; i < 100; ++i) s = mh_step(std::move(s), target, cfg, rng);
    CHECK(s.stats.accepts == 100);
    CHECK((s.theta - start).norm() < 1e-6);
  }

  TEST_CASE("runs are bitwise reproducible") {
    Rng rng = make_rng(3);
    const ConstrainedModel cm = sphere_model(sphere_data(Vector::Unit(3, 0), 20, rng));
    const CgfdTarget target(cm);
    for (const SamplerConfig& cfg : {SamplerConfig(default_hmc_config(3)), SamplerConfig(default_mh_config(2))}) {
      const ChainResult a = run_chain(target, Vector::Unit(3, 0), cfg, {300, 100, 2}, 4);
      const ChainResult b = run_chain(target, Vector::Unit(3, 0), cfg, {300, 100, 2}, 4);
      CHECK(a.samples.rows() == 100);
      CHECK(a.samples == b.samples);
      const ChainResult c = run_chain(target, Vector::Unit(3, 0), cfg, {300, 100, 2}, 5);
      CHECK(a.samples != c.samples);
    }
  }

  TEST_CASE("empty retained set") {
    const FunctionTarget target = uniform_circle();
    const ChainResult r = run_chain(target, e1(), default_mh_config(1), {50, 50, 1});
    CHECK(r.samples.rows() == 0);
    CHECK(r.samples.cols() == 2);
    CHECK(r.diagnostics.iterations == 50);
    CHECK(r.diagnostics.mean_abs_drift == 0.0);
    const ChainResult none = run_chain(target, e1(), default_mh_config(1), {0, 0, 1});
    CHECK(none.diagnostics.iterations == 0);
    CHECK(none.diagnostics.acceptance_rate == 0.0);
  }

  TEST_CASE("initial point handling") {
    const FunctionTarget target = uniform_circle();
    Vector off(2);
    off << 1.5, 0.1;
    const ChainResult r = run_chain(target, off, default_mh_config(1), {10, 0, 1});
    CHECK(circle()->violation(r.samples.row(0).transpose()) <= 1e-8);

    try {
      run_chain(target, Vector::Zero(2), default_mh_config(1), {10, 0, 1});
      FAIL("expected InfeasibleInit");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InfeasibleInit);
    }
    const FunctionTarget dead(circle(), [](const Vector&) { return -std::numeric_limits<double>::infinity(); });
    CHECK_THROWS_AS(run_chain(dead, e1(), default_mh_config(1), {10, 0, 1}), Error);
    CHECK_THROWS_AS(run_chain(target, e1(), default_mh_config(1), {10, 20, 1}), Error);
    CHECK_THROWS_AS(run_chain(target, e1(), default_mh_config(1), {10, 0, 0}), Error);
  }

  TEST_CASE("invalid sampler settings") {
    HmcConfig hmc;
    hmc.step_size = 0.0;
    CHECK_THROWS_AS(validate(hmc, 2), Error);
    hmc.step_size = 0.1;
    hmc.mass = Matrix::Identity(2, 2);
    hmc.mass(1, 1) = -1.0;
    CHECK_THROWS_AS(validate(hmc, 2), Error);
    hmc.mass = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(validate(hmc, 2), Error);
    MhConfig mh;
    mh.tangent_scale = -1.0;
    CHECK_THROWS_AS(validate(mh), Error);
    const FunctionTarget no_grad(circle(), [](const Vector&) { return 0.0; });
    CHECK_THROWS_AS(run_chain(no_grad, e1(), HmcConfig{}, {10, 0, 1}), Error);
  }

  TEST_CASE("momentum projection satisfies the hidden constraint") {
    Rng rng = make_rng(4);
    const Matrix g = Matrix::NullaryExpr(2, 5, [&]() { return uniform(rng, -1, 1); });
    const Matrix b = Matrix::NullaryExpr(5, 5, [&]() { return uniform(rng, -1, 1); });
    const Matrix mass = b * b.transpose() + Matrix::Identity(5, 5);
    const Matrix minv = mass.inverse();
    const Vector p = project_momentum(g, minv, gaussian(5, rng));
    CHECK((g * minv * p).norm() < 1e-12);
    CHECK((project_momentum(g, minv, p) - p).norm() < 1e-12);
  }

  TEST_CASE("RATTLE is reversible") {
    Rng rng = make_rng(5);
    const FunctionTarget vm(circle(), [](const Vector& x) { return std::cos(std::atan2(x(1), x(0))); },
                            [](const Vector& x) {
                              // cos(atan2(y, x)) = x / r.
                              const double r = x.norm();
                              Vector g(2);
                              g << x(1) * x(1) / (r * r * r), -x(0) * x(1) / (r * r * r);
                              return g;
                            });
    const ConstrainedModel cm = sphere_model(sphere_data(Vector::Unit(3, 1), 20, rng));
    const CgfdTarget sphere(cm);

    auto check = [&](const Target& target, const Vector& x0, const HmcConfig& cfg) {
      const Matrix minv = Matrix::Identity(x0.size(), x0.size());
      const Vector p0 = project_momentum(target.manifold().constraint_jacobian(x0), minv, gaussian(x0.size(), rng));
      const Trajectory fwd = rattle_trajectory(target, x0, p0, cfg);
      REQUIRE(fwd.ok);
      const Trajectory back = rattle_trajectory(target, fwd.theta, -fwd.momentum, cfg);
      REQUIRE(back.ok);
      CHECK((back.theta - x0).norm() <= 1e-6);
      CHECK((back.momentum + p0).norm() <= 1e-6);
      CHECK(target.manifold().violation(fwd.theta) <= 1e-10);
    };
    for (int k = 0; k < 5; ++k) {
      check(vm, gaussian(2, rng).normalized(), default_hmc_config(2));
      check(sphere, gaussian(3, rng).normalized(), default_hmc_config(3));
    }
  }

  TEST_CASE("sphere HMC acceptance with the default step size") {
    Rng rng = make_rng(6);
    Vector truth(3);
    truth << std::sqrt(5.0 / 8.0), std::sqrt(1.0 / 8.0), std::sqrt(1.0 / 16.0);
    const ConstrainedModel cm = sphere_model(sphere_data(truth.normalized(), 20, rng));
    const CgfdTarget target(cm);
    HmcConfig cfg = default_hmc_config(3);
    const ChainResult r = run_chain(target, truth.normalized(), cfg, {2000, 1000, 1});
    CHECK(r.diagnostics.acceptance_rate >= 0.4);
    CHECK(r.diagnostics.acceptance_rate < 1.0);
    CHECK(r.diagnostics.max_abs_drift <= 1e-8);
    // The [0.4, 0.99] band is reported by the acceptance binary; a coarser step lands inside it.
    cfg.step_size *= 4.0;
    const ChainResult coarse = run_chain(target, truth.normalized(), cfg, {2000, 1000, 1});
    CHECK(coarse.diagnostics.acceptance_rate >= 0.4);
    CHECK(coarse.diagnostics.acceptance_rate <= 0.99);
    CHECK(coarse.diagnostics.acceptance_rate < r.diagnostics.acceptance_rate);
  }

  TEST_CASE("HMC with a non-identity mass matrix keeps the uniform law") {
    const FunctionTarget target = uniform_circle();
    HmcConfig cfg = default_hmc_config(2);
    cfg.mass = Matrix::Identity(2, 2);
    cfg.mass(0, 0) = 2.0;
    cfg.mass(0, 1) = cfg.mass(1, 0) = 0.3;
    cfg.seed = 8;
    const ChainResult r = run_chain(target, e1(), cfg, {10000, 0, 1});
    CHECK(chi_square_p_value(r.samples, 36) > 0.01);
  }

  TEST_CASE("logspline samples stay normalized") {
    Rng rng = make_rng(7);
    const ConstrainedModel cm = logspline_model(triangular_data(200, rng));
    const auto& model = static_cast<const LogsplineModel&>(*cm.model);
    const Vector init = fit_logspline(model.basis(), model.mean_basis());
    MhConfig cfg;
    cfg.tangent_scale = 0.1;
    const ChainResult r = run_chain(CgfdTarget(cm), init, cfg, {1000, 0, 1});
    CHECK(r.diagnostics.acceptance_rate > 0.1);
    for (Eigen::Index i = 0; i < r.samples.rows(); ++i) {
      CHECK(logspline_integrals(model.basis(), r.samples.row(i).transpose()).normalizer ==
            doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("AR(1) samples map to Toeplitz covariances") {
    Rng rng = make_rng(8);
    const ConstrainedModel cm = ar1_model(simulate_ar1(0.5, 1.0, 10, rng));
    const ChainResult r =
        run_chain(CgfdTarget(cm), ar1_initial_point(0.5, 1.0, 10), default_mh_config(cm.manifold->intrinsic_dim()),
                  {300, 0, 1});
    CHECK(r.diagnostics.acceptance_rate > 0.0);
    for (Eigen::Index i = 0; i < r.samples.rows(); ++i) {
      const Matrix cov = ar1_covariance(r.samples.row(i).transpose(), 10);
      double toeplitz = 0.0;
      for (int a = 0; a + 1 < 10; ++a) {
        for (int b = a; b + 1 < 10; ++b) toeplitz = std::max(toeplitz, std::abs(cov(a, b) - cov(a + 1, b + 1)));
      }
      CHECK(toeplitz <= 1e-6);
      CHECK(std::abs(ar1_rho(cov)) <= 1.0);
    }
  }

  TEST_CASE("diagnostics serialize") {
    const FunctionTarget target = uniform_circle();
    const ChainResult r = run_chain(target, e1(), default_mh_config(1), {100, 0, 1});
    const nlohmann::json j = r.diagnostics;
    for (const char* key : {"acceptance_rate", "projection_failure_rate", "reverse_check_failure_rate",
                            "mean_abs_drift"}) {
      CHECK(j.contains(key));
    }
    CHECK(j["iterations"] == 100);
  }
}
