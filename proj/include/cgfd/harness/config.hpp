#pragma once

#include "cgfd/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cgfd {

enum class ModelKind { Sphere, Logspline, Ar1, EqualMeans };
enum class SamplerKind { Hmc, Mh };

std::string_view to_string(ModelKind kind);
std::string_view to_string(SamplerKind kind);
ModelKind parse_model_kind(std::string_view name);
SamplerKind parse_sampler_kind(std::string_view name);

/// One replicated study. `truth` is model specific:
///   sphere      mean vector (projected onto the sphere before use)
///   logspline   triangular (lower, mode, upper)
///   ar1         (rho, sigma)
///   equal_means (mu, sigma1, sigma2)
struct StudyConfig {
  ModelKind model = ModelKind::Logspline;
  SamplerKind sampler = SamplerKind::Mh;
  std::vector<double> truth;
  int n = 500;
  int replicates = 100;
  int samples = 15000;
  int burn_in = 5000;
  int thin = 1;
  std::vector<double> levels{0.5, 0.8, 0.9, 0.95};
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  // Sampler tuning; 0 selects the default heuristic.
  double step_size = 0.0;
  int n_leapfrog = 20;
  double tangent_scale = 0.0;

  int resolution = 200;  // grid cells per chart coordinate
  int threads = 0;       // 0 = hardware concurrency
};

/// Desk-scale defaults for each model.
StudyConfig default_study(ModelKind model);

/// Throws InvalidConfig on out-of-range fields.
void validate(const StudyConfig& cfg);

void to_json(nlohmann::json& j, const StudyConfig& cfg);
/// Missing keys keep the defaults of default_study(model).
void from_json(const nlohmann::json& j, StudyConfig& cfg);

StudyConfig load_config(const std::string& path);
void save_config(const StudyConfig& cfg, const std::string& path);

/// FNV-1a of the canonical JSON form, excluding output_dir and threads, as
/// 16 hex digits.
std::string config_hash(const StudyConfig& cfg);
/// "# config_hash=<hash> seed=<seed>"
std::string header_line(const StudyConfig& cfg);

}  // namespace cgfd
