#pragma once

#include "cgfd/fiducial.hpp"
#include "cgfd/geometry.hpp"
#include "cgfd/models/model.hpp"
#include "cgfd/rng.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <variant>

namespace cgfd {

/// Unnormalized log density on a manifold, evaluated through a tangent frame
/// so samplers can reuse the frame they already built.
class Target {
 public:
  virtual ~Target() = default;

  virtual const ImplicitManifold& manifold() const = 0;
  virtual double log_density(const TangentFrame& frame) const = 0;
  virtual bool has_gradient() const { return false; }
  /// Ambient gradient of log_density; only its tangential part matters.
  virtual Vector grad_log_density(const Vector& theta) const;
};

/// The constrained fiducial kernel of a model.
class CgfdTarget final : public Target {
 public:
  explicit CgfdTarget(ConstrainedModel cm, Tolerances tol = {}) : cm_(std::move(cm)), tol_(tol) {}

  const ImplicitManifold& manifold() const override { return *cm_.manifold; }
  double log_density(const TangentFrame& frame) const override;
  bool has_gradient() const override { return true; }
  Vector grad_log_density(const Vector& theta) const override;

 private:
  ConstrainedModel cm_;
  Tolerances tol_;
};

/// Arbitrary log density given as a function of the ambient point.
class FunctionTarget final : public Target {
 public:
  using LogFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  FunctionTarget(std::shared_ptr<const ImplicitManifold> m, LogFn log_density, GradFn grad = {})
      : m_(std::move(m)), log_(std::move(log_density)), grad_(std::move(grad)) {}

  const ImplicitManifold& manifold() const override { return *m_; }
  double log_density(const TangentFrame& frame) const override { return log_(frame.point); }
  bool has_gradient() const override { return static_cast<bool>(grad_); }
  Vector grad_log_density(const Vector& theta) const override;

 private:
  std::shared_ptr<const ImplicitManifold> m_;
  LogFn log_;
  GradFn grad_;
};

struct ChainStats {
  std::int64_t proposals = 0;
  std::int64_t accepts = 0;
  std::int64_t projection_failures = 0;
  std::int64_t reverse_check_failures = 0;
  std::int64_t kernel_failures = 0;  // frame or kernel evaluation threw
};

struct ChainState {
  Vector theta;
  double log_kernel = 0.0;
  TangentFrame frame;
  ChainStats stats;
};

/// Builds a state at a feasible theta. Throws OffManifold otherwise.
ChainState make_chain_state(const Target& target, const Vector& theta, const Tolerances& tol = {});

struct HmcConfig {
  double step_size = 0.1;
  int n_leapfrog = 20;
  Matrix mass;  // empty means identity
  std::uint64_t seed = 0;
  Tolerances tol;
};

struct MhConfig {
  double tangent_scale = 0.5;
  double reverse_tol = 1e-6;
  /// Test-only switch. When false the reverse projection must still converge
  /// but may land anywhere on the manifold.
  bool check_return_point = true;
  std::uint64_t seed = 0;
  Tolerances tol;
};

/// step_size = 0.1/sqrt(d), 20 leapfrog steps, identity mass.
HmcConfig default_hmc_config(int ambient_dim);
/// tangent_scale = 0.5/sqrt(d - t).
MhConfig default_mh_config(int intrinsic_dim);

/// Throws InvalidConfig when a field is out of range.
void validate(const HmcConfig& cfg, int ambient_dim);
void validate(const MhConfig& cfg);

/// One corrected tangent-space Metropolis-Hastings transition.
ChainState mh_step(ChainState state, const Target& target, const MhConfig& cfg, Rng& rng);

/// One constrained HMC transition (RATTLE integrator, Metropolis correction).
ChainState hmc_step(ChainState state, const Target& target, const HmcConfig& cfg, Rng& rng);

struct Trajectory {
  Vector theta;
  Vector momentum;
  bool ok = false;
  bool kernel_failure = false;
};

/// n_leapfrog RATTLE steps from (theta, p); p must already satisfy the hidden
/// constraint. Exposed for reversibility checks.
Trajectory rattle_trajectory(const Target& target, const Vector& theta, const Vector& momentum,
                             const HmcConfig& cfg);

/// Projects p onto { p : grad_g M^{-1} p = 0 }.
Vector project_momentum(const Matrix& grad_g, const Matrix& mass_inverse, const Vector& p);

using SamplerConfig = std::variant<HmcConfig, MhConfig>;

struct RunOptions {
  int n_samples = 1000;
  int burn_in = 0;
  int thin = 1;
};

struct Diagnostics {
  std::int64_t iterations = 0;
  double acceptance_rate = 0.0;
  double projection_failure_rate = 0.0;
  double reverse_check_failure_rate = 0.0;
  double kernel_failure_rate = 0.0;
  double mean_abs_drift = 0.0;  // mean ||g|| over retained samples
  double max_abs_drift = 0.0;
};

void to_json(nlohmann::json& j, const Diagnostics& d);

struct ChainResult {
  Matrix samples;  // one retained draw per row
  ChainStats stats;
  Diagnostics diagnostics;
};

/// Runs n_samples transitions, keeps every thin-th draw after burn_in. An
/// infeasible init is first projected along the normal space at init; if that
/// fails or the kernel is not finite there, throws InfeasibleInit. The
/// generator is make_rng(cfg.seed, chain_index).
ChainResult run_chain(const Target& target, const Vector& init, const SamplerConfig& cfg,
                      const RunOptions& opts, std::uint64_t chain_index = 0);

}  // namespace cgfd
