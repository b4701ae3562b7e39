// Command-line front end: density, sample, coverage and compare.

#include "cgfd/format.hpp"
#include "cgfd/harness/compare.hpp"
#include "cgfd/harness/config.hpp"
#include "cgfd/harness/study.hpp"
#include "cgfd/models/sphere.hpp"
#include "cgfd/quadrature.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using cgfd::Error;
using cgfd::ErrorKind;
using nlohmann::json;

struct Overrides {
  std::string config_path;
  std::string model = "logspline";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> samples;
  std::optional<int> burn_in;
  std::optional<int> thin;
  std::optional<int> resolution;
};

cgfd::StudyConfig resolve(const Overrides& o) {
  cgfd::StudyConfig cfg = o.config_path.empty()
                              ? cgfd::default_study(cgfd::parse_model_kind(o.model))
                              : cgfd::load_config(o.config_path);
  if (const char* env = std::getenv("CGFD_OUT_DIR"); env && *env) cfg.output_dir = env;
  if (o.out) cfg.output_dir = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.samples) {
    cfg.samples = *o.samples;
    if (!o.burn_in) cfg.burn_in = std::min(cfg.burn_in, cfg.samples);
  }
  if (o.burn_in) cfg.burn_in = *o.burn_in;
  if (o.thin) cfg.thin = *o.thin;
  if (o.resolution) cfg.resolution = *o.resolution;
  cgfd::validate(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  return cfg;
}

std::string out_path(const cgfd::StudyConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << '\n';
}

cgfd::Matrix sphere_data(const cgfd::StudyConfig& cfg) {
  cgfd::Rng rng = cgfd::make_rng(cfg.seed, 0);
  const cgfd::ReplicateProblem p = cgfd::make_problem(cfg, rng);
  return static_cast<const cgfd::SphereMvnModel&>(*p.model.model).data();
}

void cmd_density(const cgfd::StudyConfig& cfg) {
  if (cfg.model != cgfd::ModelKind::Sphere) {
    throw Error(ErrorKind::InvalidConfig, "density is available for the sphere model");
  }
  const cgfd::ConstrainedModel cm = cgfd::sphere_model(sphere_data(cfg));
  auto chart = std::make_shared<const cgfd::SpherePolarChart>();
  const cgfd::GridDensity grid = cgfd::normalize_on_chart(
      [&](const cgfd::Vector& mu) { return cgfd::cgfd_log_kernel(*cm.model, *cm.manifold, mu); },
      chart, cfg.resolution);
  const std::string path = out_path(cfg, "density.csv");
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << cgfd::header_line(cfg) << '\n';
  cgfd::write_csv(grid, out);
  std::cout << path << '\n';
}

void cmd_sample(const cgfd::StudyConfig& cfg) {
  cgfd::Rng rng = cgfd::make_rng(cfg.seed, 0);
  const cgfd::ReplicateProblem p = cgfd::make_problem(cfg, rng);
  const cgfd::CgfdTarget target(p.model);
  const cgfd::ChainResult res =
      cgfd::run_chain(target, p.init, cgfd::make_sampler_config(cfg, *p.model.manifold),
                      {cfg.samples, cfg.burn_in, cfg.thin});
  cgfd::write_samples_csv(res.samples, cfg, out_path(cfg, "samples.csv"));
  json diag = res.diagnostics;
  diag["config_hash"] = cgfd::config_hash(cfg);
  diag["seed"] = cfg.seed;
  diag["retained"] = res.samples.rows();
  write_json(diag, out_path(cfg, "diagnostics.json"));
  std::cout << out_path(cfg, "samples.csv") << '\n';
}

void cmd_coverage(const cgfd::StudyConfig& cfg) {
  const cgfd::CoverageReport report = cgfd::coverage_study(cfg);
  cgfd::write_report_json(report, out_path(cfg, "coverage.json"));
  cgfd::write_report_csv(report, out_path(cfg, "coverage.csv"));
  std::cout << out_path(cfg, "coverage.json") << '\n';
}

void cmd_compare(const cgfd::StudyConfig& cfg, std::optional<int> samples) {
  if (cfg.model != cgfd::ModelKind::Sphere) {
    throw Error(ErrorKind::InvalidConfig, "compare is defined for the sphere model");
  }
  cgfd::SphereCompareOptions opts;
  opts.resolution = cfg.resolution;
  opts.seed = cfg.seed;
  if (samples) {
    opts.mh_samples = *samples;
    opts.hmc_samples = *samples / 10;
  }
  const cgfd::SphereCompareTable table = cgfd::sphere_compare(sphere_data(cfg), opts);
  json j = table;
  j["config_hash"] = cgfd::config_hash(cfg);
  j["seed"] = cfg.seed;
  write_json(j, out_path(cfg, "compare.json"));

  const std::string csv = out_path(cfg, "compare.csv");
  std::ofstream out(csv);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + csv);
  out << cgfd::header_line(cfg) << "\noctant";
  for (const char* r : cgfd::SphereCompareTable::routes) out << ',' << r;
  out << '\n';
  for (int o = 0; o < 8; ++o) {
    out << table.octants[static_cast<std::size_t>(o)];
    for (int r = 0; r < 4; ++r) out << ',' << cgfd::format_double(table.masses(o, r));
    out << '\n';
  }
  std::cout << "max pairwise discrepancy " << cgfd::format_double(table.max_discrepancy) << '\n';
}

int report_error(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained generalized fiducial inference toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON study config");
    sub->add_option("--model", o.model, "model used when no config is given")
        ->check(CLI::IsMember({"sphere", "logspline", "ar1", "equal_means"}));
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory (overrides CGFD_OUT_DIR)");
    sub->add_option("--samples", o.samples, "sampler iterations");
    sub->add_option("--burn-in", o.burn_in, "iterations discarded");
    sub->add_option("--thin", o.thin, "keep every n-th draw");
    sub->add_option("--resolution", o.resolution, "grid cells per chart coordinate");
  };
  CLI::App* density = app.add_subcommand("density", "grid density CSV of the sphere kernel");
  CLI::App* sample = app.add_subcommand("sample", "run one chain");
  CLI::App* coverage = app.add_subcommand("coverage", "replicated coverage study");
  CLI::App* compare = app.add_subcommand("compare", "sphere octant table across four routes");
  for (CLI::App* sub : {density, sample, coverage, compare}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("InvalidArguments", e.what());
  }

  try {
    const cgfd::StudyConfig cfg = resolve(o);
    if (*density) cmd_density(cfg);
    if (*sample) cmd_sample(cfg);
    if (*coverage) cmd_coverage(cfg);
    if (*compare) cmd_compare(cfg, o.samples);
  } catch (const Error& e) {
    return report_error(cgfd::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("Internal", e.what());
  }
  return 0;
}
