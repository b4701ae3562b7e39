#pragma once

#include "cgfd/harness/config.hpp"
#include "cgfd/models/model.hpp"
#include "cgfd/rng.hpp"
#include "cgfd/samplers.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cgfd {

/// Everything one replicate needs: a model bound to freshly simulated data,
/// a starting point, and the scalar functionals whose coverage is tracked.
struct ReplicateProblem {
  ConstrainedModel model;
  Vector init;
  std::vector<std::string> names;
  Vector truth;
  std::function<Vector(const Vector&)> functionals;
};

/// Simulates data at cfg.truth with data_rng and builds the problem.
ReplicateProblem make_problem(const StudyConfig& cfg, Rng& data_rng);

/// Sampler settings for a problem, filling in default step sizes.
SamplerConfig make_sampler_config(const StudyConfig& cfg, const ImplicitManifold& m);

/// Upper one-sided bound at `level`: the ceil(level * K)-th smallest of the K
/// values (type-1 order statistic). Throws EmptySamples if values is empty.
double upper_bound(std::vector<double> values, double level);

struct CoverageEntry {
  std::string functional;
  double nominal = 0.0;
  double empirical = 0.0;
  int replicates = 0;
  std::optional<double> standard_error;  // sqrt(e(1-e)/R); empty when R < 2
};

struct ReplicateFailure {
  int replicate = 0;
  std::string kind;
  std::string message;
};

struct CoverageReport {
  StudyConfig config;
  std::string config_hash;
  std::vector<CoverageEntry> entries;
  int replicates_requested = 0;
  int replicates_ok = 0;
  std::vector<ReplicateFailure> failures;
  double mean_acceptance = 0.0;
};

/// Runs the replicates (in parallel, one RNG stream per replicate) and
/// aggregates upper-bound coverage per functional and level.
CoverageReport coverage_study(const StudyConfig& cfg);

void to_json(nlohmann::json& j, const CoverageReport& report);
void write_report_json(const CoverageReport& report, const std::string& path);
void write_report_csv(const CoverageReport& report, const std::string& path);

/// Writes retained draws as CSV with the config header line.
void write_samples_csv(const Matrix& samples, const StudyConfig& cfg, const std::string& path);

}  // namespace cgfd
