#include "cgfd/harness/config.hpp"

#include "cgfd/format.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace cgfd {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Sphere: return "sphere";
    case ModelKind::Logspline: return "logspline";
    case ModelKind::Ar1: return "ar1";
    case ModelKind::EqualMeans: return "equal_means";
  }
  return "unknown";
}

std::string_view to_string(SamplerKind kind) {
  return kind == SamplerKind::Hmc ? "hmc" : "mh";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto kind : {ModelKind::Sphere, ModelKind::Logspline, ModelKind::Ar1, ModelKind::EqualMeans}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown model '" + std::string(name) + "'");
}

SamplerKind parse_sampler_kind(std::string_view name) {
  if (name == "hmc") return SamplerKind::Hmc;
  if (name == "mh") return SamplerKind::Mh;
  throw Error(ErrorKind::InvalidConfig, "unknown sampler '" + std::string(name) + "'");
}

StudyConfig default_study(ModelKind model) {
  StudyConfig cfg;
  cfg.model = model;
  switch (model) {
    case ModelKind::Sphere:
      cfg.sampler = SamplerKind::Hmc;
      cfg.truth = {std::sqrt(5.0 / 8.0), std::sqrt(1.0 / 8.0), std::sqrt(1.0 / 16.0)};
      cfg.n = 20;
      cfg.replicates = 100;
      cfg.samples = 2000;
      cfg.burn_in = 1000;
      break;
    case ModelKind::Logspline:
      cfg.sampler = SamplerKind::Mh;
      cfg.truth = {0.0, 0.2, 1.0};
      cfg.n = 500;
      cfg.replicates = 100;
      cfg.samples = 15000;
      cfg.burn_in = 5000;
      cfg.tangent_scale = 0.1;
      break;
    case ModelKind::Ar1:
      cfg.sampler = SamplerKind::Mh;
      cfg.truth = {0.5, 1.0};
      cfg.n = 10;
      cfg.replicates = 50;
      cfg.samples = 20000;
      cfg.burn_in = 10000;
      cfg.levels = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
      break;
    case ModelKind::EqualMeans:
      cfg.sampler = SamplerKind::Mh;
      cfg.truth = {0.0, 1.0, 1.0};
      cfg.n = 2;
      cfg.replicates = 100;
      cfg.samples = 4000;
      cfg.burn_in = 2000;
      break;
  }
  return cfg;
}

void validate(const StudyConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (cfg.n < 1) fail("n must be positive");
  if (cfg.replicates < 1) fail("replicates must be positive");
  if (cfg.samples < 0 || cfg.burn_in < 0 || cfg.burn_in > cfg.samples) {
    fail("need 0 <= burn_in <= samples");
  }
  if (cfg.thin < 1) fail("thin must be positive");
  if (cfg.levels.empty()) fail("at least one nominal level is required");
  for (double l : cfg.levels) {
    if (!(l > 0.0 && l < 1.0)) fail("levels must lie strictly inside (0, 1)");
  }
  if (cfg.step_size < 0.0 || cfg.tangent_scale < 0.0) fail("step sizes must be nonnegative");
  if (cfg.n_leapfrog < 0) fail("n_leapfrog must be nonnegative");
  if (cfg.resolution < 1) fail("resolution must be positive");
  if (cfg.threads < 0) fail("threads must be nonnegative");

  const std::size_t want = cfg.model == ModelKind::Sphere      ? 3
                           : cfg.model == ModelKind::Logspline ? 3
                           : cfg.model == ModelKind::Ar1       ? 2
                                                               : 3;
  if (cfg.truth.size() != want) fail("truth has the wrong number of entries for this model");
  switch (cfg.model) {
    case ModelKind::Sphere:
      if (!(std::hypot(cfg.truth[0], cfg.truth[1], cfg.truth[2]) > 0.0)) fail("sphere truth is zero");
      break;
    case ModelKind::Logspline:
      if (!(cfg.truth[0] == 0.0 && cfg.truth[2] == 1.0 && cfg.truth[1] > 0.0 && cfg.truth[1] < 1.0)) {
        fail("logspline truth must be a triangular law on [0, 1]");
      }
      break;
    case ModelKind::Ar1:
      if (!(std::abs(cfg.truth[0]) < 1.0 && cfg.truth[1] > 0.0)) fail("ar1 truth needs |rho| < 1, sigma > 0");
      if (cfg.n < 3) fail("ar1 needs n >= 3");
      break;
    case ModelKind::EqualMeans:
      if (!(cfg.truth[1] > 0.0 && cfg.truth[2] > 0.0)) fail("equal_means scales must be positive");
      if (cfg.n != 2) fail("equal_means uses exactly two observations");
      break;
  }
}

void to_json(json& j, const StudyConfig& cfg) {
  j = json{{"model", std::string(to_string(cfg.model))},
           {"sampler", std::string(to_string(cfg.sampler))},
           {"truth", cfg.truth},
           {"n", cfg.n},
           {"replicates", cfg.replicates},
           {"samples", cfg.samples},
           {"burn_in", cfg.burn_in},
           {"thin", cfg.thin},
           {"levels", cfg.levels},
           {"seed", cfg.seed},
           {"output_dir", cfg.output_dir},
           {"step_size", cfg.step_size},
           {"n_leapfrog", cfg.n_leapfrog},
           {"tangent_scale", cfg.tangent_scale},
           {"resolution", cfg.resolution},
           {"threads", cfg.threads}};
}

void from_json(const json& j, StudyConfig& cfg) {
  try {
    const ModelKind model = parse_model_kind(j.at("model").get<std::string>());
    cfg = default_study(model);
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    if (j.contains("sampler")) cfg.sampler = parse_sampler_kind(j.at("sampler").get<std::string>());
    take("truth", cfg.truth);
    take("n", cfg.n);
    take("replicates", cfg.replicates);
    take("samples", cfg.samples);
    take("burn_in", cfg.burn_in);
    take("thin", cfg.thin);
    take("levels", cfg.levels);
    take("seed", cfg.seed);
    take("output_dir", cfg.output_dir);
    take("step_size", cfg.step_size);
    take("n_leapfrog", cfg.n_leapfrog);
    take("tangent_scale", cfg.tangent_scale);
    take("resolution", cfg.resolution);
    take("threads", cfg.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("bad config: ") + e.what());
  }
}

StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  StudyConfig cfg = j.get<StudyConfig>();
  validate(cfg);
  return cfg;
}

void save_config(const StudyConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << json(cfg).dump(2) << '\n';
}

std::string config_hash(const StudyConfig& cfg) {
  json j = cfg;
  j.erase("output_dir");
  j.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::string header_line(const StudyConfig& cfg) {
  return "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed);
}

}  // namespace cgfd
