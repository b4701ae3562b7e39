#include "cgfd/samplers.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace cgfd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

struct MassTerms {
  Matrix mass;
  Matrix inverse;
  Matrix cholesky;  // lower factor L with M = L L^T
  double half_log_det = 0.0;
  bool identity = true;
};

MassTerms mass_terms(const HmcConfig& cfg, int d) {
  MassTerms out;
  out.mass = cfg.mass.size() == 0 ? Matrix::Identity(d, d) : cfg.mass;
  Eigen::LLT<Matrix> llt(out.mass);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidConfig, "mass matrix is not symmetric positive definite");
  }
  out.cholesky = llt.matrixL();
  out.inverse = llt.solve(Matrix::Identity(d, d));
  out.half_log_det = out.cholesky.diagonal().array().log().sum();
  out.identity = out.mass.isIdentity(0.0);
  return out;
}

double log_det_spd(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::DegenerateJacobian, "Gram matrix is singular");
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

// With a non-identity mass the constrained flow preserves the surface measure of the
// metric M, which differs from the Euclidean one by sqrt(|G M^-1 G^T| / |G G^T|).
// Adding half the log of that ratio to U restores the Euclidean target.
double metric_correction(const ImplicitManifold& m, const Vector& theta, const MassTerms& mt) {
  if (mt.identity) return 0.0;
  const Matrix g = m.constraint_jacobian(theta);
  if (g.rows() == 0) return 0.0;
  return 0.5 * (log_det_spd(g * mt.inverse * g.transpose()) - log_det_spd(g * g.transpose()));
}

Vector metric_correction_gradient(const ImplicitManifold& m, const Vector& theta, const MassTerms& mt) {
  Vector out = Vector::Zero(theta.size());
  if (mt.identity) return out;
  const Matrix g = m.constraint_jacobian(theta);
  if (g.rows() == 0) return out;
  const Matrix a_inv = (g * mt.inverse * g.transpose()).inverse();
  const Matrix b_inv = (g * g.transpose()).inverse();
  const Matrix left = mt.inverse * g.transpose() * a_inv;
  const Matrix right = g.transpose() * b_inv;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const Matrix dg = m.jacobian_derivative(theta, static_cast<int>(i));
    out(i) = (dg * left).trace() - (dg * right).trace();
  }
  return out;
}

// Potential gradient grad U = -grad log kernel (+ metric term). Throws on kernel failure.
Vector potential_gradient(const Target& target, const Vector& theta, const MassTerms& mt) {
  return metric_correction_gradient(target.manifold(), theta, mt) - target.grad_log_density(theta);
}

// Newton may wander where g itself is undefined; that is a failed projection.
Projection guarded_projection(const ImplicitManifold& m, const Vector& y0, const TangentFrame& frame,
                              const Tolerances& tol) {
  try {
    return project_to_manifold(m, y0, frame, tol);
  } catch (const Error&) {
    Projection failed;
    failed.point = y0;
    return failed;
  }
}

Trajectory integrate(const Target& target, const Vector& theta0, const Vector& p0,
                     const HmcConfig& cfg, const MassTerms& mt) {
  const ImplicitManifold& m = target.manifold();
  const double eps = cfg.step_size;
  Trajectory traj{theta0, p0, true, false};
  try {
    Vector grad_u = potential_gradient(target, traj.theta, mt);
    for (int step = 0; step < cfg.n_leapfrog; ++step) {
      const Vector p_half = traj.momentum - 0.5 * eps * grad_u;
      const Matrix directions = mt.inverse * m.constraint_jacobian(traj.theta).transpose();
      const Vector y0 = traj.theta + eps * mt.inverse * p_half;
      const Projection proj = project_along(m, y0, directions, cfg.tol);
      if (!proj.ok()) {
        traj.ok = false;
        return traj;
      }
      const Vector p_constrained = mt.mass * (proj.point - traj.theta) / eps;
      traj.theta = proj.point;
      grad_u = potential_gradient(target, traj.theta, mt);
      const Vector p_end = p_constrained - 0.5 * eps * grad_u;
      traj.momentum = project_momentum(m.constraint_jacobian(traj.theta), mt.inverse, p_end);
    }
  } catch (const Error&) {
    traj.ok = false;
    traj.kernel_failure = true;
  }
  return traj;
}

}  // namespace

Vector Target::grad_log_density(const Vector&) const {
  throw Error(ErrorKind::InvalidConfig, "target has no gradient");
}

double CgfdTarget::log_density(const TangentFrame& frame) const {
  return cgfd_log_kernel(*cm_.model, frame);
}

Vector CgfdTarget::grad_log_density(const Vector& theta) const {
  return cgfd_grad_log(*cm_.model, *cm_.manifold, theta, tol_);
}

Vector FunctionTarget::grad_log_density(const Vector& theta) const {
  if (!grad_) throw Error(ErrorKind::InvalidConfig, "target has no gradient");
  return grad_(theta);
}

ChainState make_chain_state(const Target& target, const Vector& theta, const Tolerances& tol) {
  const ImplicitManifold& m = target.manifold();
  if (!(m.violation(theta) <= tol.on_manifold)) {
    throw Error(ErrorKind::OffManifold, "chain state must lie on the manifold");
  }
  ChainState state;
  state.theta = theta;
  state.frame = tangent_frame(m, theta, tol);
  state.log_kernel = target.log_density(state.frame);
  return state;
}

HmcConfig default_hmc_config(int ambient_dim) {
  HmcConfig cfg;
  cfg.step_size = 0.1 / std::sqrt(static_cast<double>(ambient_dim));
  cfg.n_leapfrog = 20;
  return cfg;
}

MhConfig default_mh_config(int intrinsic_dim) {
  MhConfig cfg;
  cfg.tangent_scale = 0.5 / std::sqrt(static_cast<double>(intrinsic_dim));
  return cfg;
}

void validate(const HmcConfig& cfg, int ambient_dim) {
  if (!(cfg.step_size > 0.0)) throw Error(ErrorKind::InvalidConfig, "step_size must be positive");
  if (cfg.n_leapfrog < 0) throw Error(ErrorKind::InvalidConfig, "n_leapfrog must be >= 0");
  if (cfg.mass.size() != 0 && (cfg.mass.rows() != ambient_dim || cfg.mass.cols() != ambient_dim)) {
    throw Error(ErrorKind::InvalidConfig, "mass matrix has the wrong shape");
  }
  if (cfg.mass.size() != 0) mass_terms(cfg, ambient_dim);
}

void validate(const MhConfig& cfg) {
  if (!(cfg.tangent_scale > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "tangent_scale must be positive");
  }
  if (!(cfg.reverse_tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "reverse_tol must be positive");
}

Vector project_momentum(const Matrix& grad_g, const Matrix& mass_inverse, const Vector& p) {
  if (grad_g.rows() == 0) return p;
  const Matrix gm = grad_g * mass_inverse;
  const Matrix system = gm * grad_g.transpose();
  const Vector multipliers = system.ldlt().solve(gm * p);
  return p - grad_g.transpose() * multipliers;
}

ChainState mh_step(ChainState state, const Target& target, const MhConfig& cfg, Rng& rng) {
  const ImplicitManifold& m = target.manifold();
  const double s = cfg.tangent_scale;
  ++state.stats.proposals;

  const Vector v = s * standard_normal(state.frame.tangent.cols(), rng);
  const double log_u = std::log(uniform01(rng));

  const Vector& x = state.theta;
  const Projection forward = guarded_projection(m, x + state.frame.tangent * v, state.frame, cfg.tol);
  if (!forward.ok()) {
    ++state.stats.projection_failures;
    return state;
  }
  const Vector& y = forward.point;

  TangentFrame frame_y;
  double log_kernel_y = kNegInf;
  try {
    frame_y = tangent_frame(m, y, cfg.tol);
    log_kernel_y = target.log_density(frame_y);
  } catch (const Error&) {
    ++state.stats.kernel_failures;
    return state;
  }
  if (!std::isfinite(log_kernel_y)) return state;

  const Vector v_rev = frame_y.tangent.transpose() * (x - y);
  const double log_alpha =
      log_kernel_y - state.log_kernel - (v_rev.squaredNorm() - v.squaredNorm()) / (2.0 * s * s);
  if (!(log_u < log_alpha)) return state;

  // The reverse move from y must be able to propose x.
  const Projection reverse = guarded_projection(m, y + frame_y.tangent * v_rev, frame_y, cfg.tol);
  if (!reverse.ok() || (cfg.check_return_point && (reverse.point - x).norm() > cfg.reverse_tol)) {
    ++state.stats.reverse_check_failures;
    return state;
  }

  ++state.stats.accepts;
  state.theta = y;
  state.frame = std::move(frame_y);
  state.log_kernel = log_kernel_y;
  return state;
}

Trajectory rattle_trajectory(const Target& target, const Vector& theta, const Vector& momentum,
                             const HmcConfig& cfg) {
  const MassTerms mt = mass_terms(cfg, static_cast<int>(theta.size()));
  return integrate(target, theta, momentum, cfg, mt);
}

ChainState hmc_step(ChainState state, const Target& target, const HmcConfig& cfg, Rng& rng) {
  const ImplicitManifold& m = target.manifold();
  const int d = static_cast<int>(state.theta.size());
  const MassTerms mt = mass_terms(cfg, d);
  ++state.stats.proposals;

  Vector p = mt.cholesky * standard_normal(d, rng);
  const double log_u = std::log(uniform01(rng));
  if (cfg.n_leapfrog == 0) {
    ++state.stats.accepts;
    return state;
  }
  p = project_momentum(m.constraint_jacobian(state.theta), mt.inverse, p);

  // H = 0.5 p^T M^{-1} p + U, U = -log kernel + 0.5 log|M| + metric term.
  double h0 = 0.0;
  try {
    h0 = 0.5 * p.dot(mt.inverse * p) - state.log_kernel + mt.half_log_det +
         metric_correction(m, state.theta, mt);
  } catch (const Error&) {
    ++state.stats.kernel_failures;
    return state;
  }

  const Trajectory traj = integrate(target, state.theta, p, cfg, mt);
  if (!traj.ok) {
    if (traj.kernel_failure) {
      ++state.stats.kernel_failures;
    } else {
      ++state.stats.projection_failures;
    }
    return state;
  }

  TangentFrame frame_end;
  double log_kernel_end = kNegInf;
  double metric_end = 0.0;
  try {
    frame_end = tangent_frame(m, traj.theta, cfg.tol);
    log_kernel_end = target.log_density(frame_end);
    metric_end = metric_correction(m, traj.theta, mt);
  } catch (const Error&) {
    ++state.stats.kernel_failures;
    return state;
  }
  if (!std::isfinite(log_kernel_end)) return state;

  const double h1 =
      0.5 * traj.momentum.dot(mt.inverse * traj.momentum) - log_kernel_end + mt.half_log_det + metric_end;
  if (!(log_u < h0 - h1)) return state;

  ++state.stats.accepts;
  state.theta = traj.theta;
  state.frame = std::move(frame_end);
  state.log_kernel = log_kernel_end;
  return state;
}

void to_json(nlohmann::json& j, const Diagnostics& d) {
  j = nlohmann::json{{"iterations", d.iterations},
                     {"acceptance_rate", d.acceptance_rate},
                     {"projection_failure_rate", d.projection_failure_rate},
                     {"reverse_check_failure_rate", d.reverse_check_failure_rate},
                     {"kernel_failure_rate", d.kernel_failure_rate},
                     {"mean_abs_drift", d.mean_abs_drift},
                     {"max_abs_drift", d.max_abs_drift}};
}

ChainResult run_chain(const Target& target, const Vector& init, const SamplerConfig& cfg,
                      const RunOptions& opts, std::uint64_t chain_index) {
  const ImplicitManifold& m = target.manifold();
  if (opts.n_samples < 0 || opts.burn_in < 0 || opts.burn_in > opts.n_samples || opts.thin < 1) {
    throw Error(ErrorKind::InvalidConfig, "need 0 <= burn_in <= n_samples and thin >= 1");
  }
  if (init.size() != m.ambient_dim()) {
    throw Error(ErrorKind::BadShape, "initial point has the wrong dimension");
  }
  const Tolerances tol = std::visit([](const auto& c) { return c.tol; }, cfg);
  const std::uint64_t seed = std::visit([](const auto& c) { return c.seed; }, cfg);
  if (const auto* hmc = std::get_if<HmcConfig>(&cfg)) {
    validate(*hmc, m.ambient_dim());
    if (!target.has_gradient()) {
      throw Error(ErrorKind::InvalidConfig, "HMC needs a target with a gradient");
    }
  } else {
    validate(std::get<MhConfig>(cfg));
  }

  Vector start = init;
  if (!(m.violation(start) <= tol.on_manifold)) {
    Projection proj;
    try {
      proj = project_along(m, start, m.constraint_jacobian(start).transpose(), tol);
    } catch (const Error&) {
      proj.status = ProjectionStatus::SingularSystem;
    }
    if (!proj.ok() || !(m.violation(proj.point) <= tol.on_manifold)) {
      throw Error(ErrorKind::InfeasibleInit, "could not project the initial point onto the manifold");
    }
    start = proj.point;
  }

  ChainState state;
  try {
    state = make_chain_state(target, start, tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::InfeasibleInit, std::string("kernel undefined at the initial point: ") + e.what());
  }
  if (!std::isfinite(state.log_kernel)) {
    throw Error(ErrorKind::InfeasibleInit, "kernel is zero at the initial point");
  }

  Rng rng = make_rng(seed, chain_index);
  const int kept = (opts.n_samples - opts.burn_in) / opts.thin;
  ChainResult result;
  result.samples.resize(kept, m.ambient_dim());
  int row = 0;
  double drift_sum = 0.0;
  double drift_max = 0.0;
  for (int it = 0; it < opts.n_samples; ++it) {
    if (const auto* hmc = std::get_if<HmcConfig>(&cfg)) {
      state = hmc_step(std::move(state), target, *hmc, rng);
    } else {
      state = mh_step(std::move(state), target, std::get<MhConfig>(cfg), rng);
    }
    const int after = it - opts.burn_in + 1;
    if (after > 0 && after % opts.thin == 0 && row < kept) {
      result.samples.row(row++) = state.theta.transpose();
      const double drift = m.violation(state.theta);
      drift_sum += drift;
      drift_max = std::max(drift_max, drift);
    }
  }
  assert(row == kept);

  result.stats = state.stats;
  Diagnostics& diag = result.diagnostics;
  diag.iterations = state.stats.proposals;
  if (diag.iterations > 0) {
    const double n = static_cast<double>(diag.iterations);
    diag.acceptance_rate = static_cast<double>(state.stats.accepts) / n;
    diag.projection_failure_rate = static_cast<double>(state.stats.projection_failures) / n;
    diag.reverse_check_failure_rate = static_cast<double>(state.stats.reverse_check_failures) / n;
    diag.kernel_failure_rate = static_cast<double>(state.stats.kernel_failures) / n;
  }
  diag.mean_abs_drift = kept > 0 ? drift_sum / kept : 0.0;
  diag.max_abs_drift = drift_max;
  return result;
}

}  // namespace cgfd
