#include "cgfd/harness/study.hpp"

#include "cgfd/format.hpp"
#include "cgfd/models/ar1.hpp"
#include "cgfd/models/equal_means.hpp"
#include "cgfd/models/logspline.hpp"
#include "cgfd/models/sphere.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

namespace cgfd {

using nlohmann::json;

namespace {

constexpr std::uint64_t kChainStreamOffset = 1ull << 32;

std::vector<std::string> functional_names(const StudyConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::Sphere: return {"mu1", "mu2", "mu3"};
    case ModelKind::Ar1: return {"rho", "sigma"};
    case ModelKind::EqualMeans: return {"mu", "sigma1", "sigma2"};
    case ModelKind::Logspline: {
      std::vector<std::string> names;
      for (double k : LinearBSplineBasis(default_logspline_knots()).knots_in_unit_interval()) {
        names.push_back("pdf@" + format_double(std::round(k * 1e6) / 1e6));
      }
      return names;
    }
  }
  return {};
}

ReplicateProblem sphere_problem(const StudyConfig& cfg, Rng& rng) {
  Vector mu(3);
  mu << cfg.truth[0], cfg.truth[1], cfg.truth[2];
  mu.normalize();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix data(cfg.n, 3);
  for (int i = 0; i < cfg.n; ++i) {
    for (int c = 0; c < 3; ++c) data(i, c) = mu(c) + normal(rng);
  }
  Vector init = data.colwise().mean().transpose();
  if (init.norm() == 0.0) init = Vector::Unit(3, 0);
  ReplicateProblem p;
  p.model = sphere_model(data);
  p.init = init.normalized();
  p.truth = mu;
  p.functionals = [](const Vector& theta) { return theta; };
  return p;
}

ReplicateProblem logspline_problem(const StudyConfig& cfg, Rng& rng) {
  const TriangularDistribution tri{cfg.truth[0], cfg.truth[1], cfg.truth[2]};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(cfg.n));
  while (static_cast<int>(data.size()) < cfg.n) {
    const double y = tri.sample(rng);
    if (y > 0.0 && y < 1.0) data.push_back(y);
  }
  auto basis = std::make_shared<const LinearBSplineBasis>(default_logspline_knots());
  auto model = std::make_shared<const LogsplineModel>(basis, data);
  ReplicateProblem p;
  p.model = {model, std::make_shared<const LogsplineConstraint>(basis)};
  p.init = fit_logspline(*basis, model->mean_basis());
  const auto knots = basis->knots_in_unit_interval();
  p.truth.resize(static_cast<Eigen::Index>(knots.size()));
  for (std::size_t i = 0; i < knots.size(); ++i) p.truth(static_cast<Eigen::Index>(i)) = tri.pdf(knots[i]);
  p.functionals = [basis](const Vector& theta) { return logspline_knot_values(*basis, theta); };
  return p;
}

ReplicateProblem ar1_problem(const StudyConfig& cfg, Rng& rng) {
  const double rho = cfg.truth[0];
  const double sigma = cfg.truth[1];
  const int n = cfg.n;
  ReplicateProblem p;
  p.model = ar1_model(simulate_ar1(rho, sigma, n, rng));
  p.init = ar1_initial_point(rho, sigma, n);
  p.truth.resize(2);
  p.truth << rho, sigma;
  p.functionals = [n](const Vector& theta) {
    const Matrix cov = ar1_covariance(theta, n);
    Vector f(2);
    f << ar1_rho(cov), ar1_sigma(cov);
    return f;
  };
  return p;
}

ReplicateProblem equal_means_problem(const StudyConfig& cfg, Rng& rng) {
  const double mu = cfg.truth[0];
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix data(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 2; ++c) data(i, c) = mu + cfg.truth[1 + c] * normal(rng);
  }
  Vector init(4);
  const double m = data.mean();
  init << m, m, std::abs(data(0, 0) - data(1, 0)) / std::sqrt(2.0),
      std::abs(data(0, 1) - data(1, 1)) / std::sqrt(2.0);
  ReplicateProblem p;
  p.model = equal_means_model(data);
  p.init = init;
  p.truth.resize(3);
  p.truth << mu, cfg.truth[1], cfg.truth[2];
  p.functionals = [](const Vector& theta) {
    Vector f(3);
    f << theta(0), theta(2), theta(3);
    return f;
  };
  return p;
}

struct ReplicateOutcome {
  bool ok = false;
  ReplicateFailure failure;
  std::vector<std::vector<bool>> covered;  // [functional][level]
  double acceptance = 0.0;
};

ReplicateOutcome run_replicate(const StudyConfig& cfg, int r) {
  ReplicateOutcome out;
  try {
    Rng data_rng = make_rng(cfg.seed, static_cast<std::uint64_t>(r));
    ReplicateProblem problem = make_problem(cfg, data_rng);
    const CgfdTarget target(problem.model);
    const SamplerConfig scfg = make_sampler_config(cfg, *problem.model.manifold);
    const ChainResult chain = run_chain(target, problem.init, scfg,
                                        {cfg.samples, cfg.burn_in, cfg.thin},
                                        kChainStreamOffset + static_cast<std::uint64_t>(r));
    if (chain.samples.rows() == 0) throw Error(ErrorKind::EmptySamples, "no retained draws");

    const Eigen::Index m = problem.truth.size();
    Matrix values(chain.samples.rows(), m);
    for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
      values.row(i) = problem.functionals(chain.samples.row(i).transpose()).transpose();
    }
    out.covered.assign(static_cast<std::size_t>(m), std::vector<bool>(cfg.levels.size()));
    for (Eigen::Index j = 0; j < m; ++j) {
      std::vector<double> column(values.col(j).data(), values.col(j).data() + values.rows());
      std::sort(column.begin(), column.end());
      for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
        out.covered[static_cast<std::size_t>(j)][l] = upper_bound(column, cfg.levels[l]) >= problem.truth(j);
      }
    }
    out.acceptance = chain.diagnostics.acceptance_rate;
    out.ok = true;
  } catch (const Error& e) {
    out.failure = {r, std::string(to_string(e.kind())), e.what()};
  } catch (const std::exception& e) {
    out.failure = {r, "Internal", e.what()};
  }
  return out;
}

}  // namespace

ReplicateProblem make_problem(const StudyConfig& cfg, Rng& data_rng) {
  ReplicateProblem p;
  switch (cfg.model) {
    case ModelKind::Sphere: p = sphere_problem(cfg, data_rng); break;
    case ModelKind::Logspline: p = logspline_problem(cfg, data_rng); break;
    case ModelKind::Ar1: p = ar1_problem(cfg, data_rng); break;
    case ModelKind::EqualMeans: p = equal_means_problem(cfg, data_rng); break;
  }
  p.names = functional_names(cfg);
  return p;
}

SamplerConfig make_sampler_config(const StudyConfig& cfg, const ImplicitManifold& m) {
  if (cfg.sampler == SamplerKind::Hmc) {
    HmcConfig h = default_hmc_config(m.ambient_dim());
    if (cfg.step_size > 0.0) h.step_size = cfg.step_size;
    h.n_leapfrog = cfg.n_leapfrog;
    h.seed = cfg.seed;
    return h;
  }
  MhConfig mh = default_mh_config(m.intrinsic_dim());
  if (cfg.tangent_scale > 0.0) mh.tangent_scale = cfg.tangent_scale;
  mh.seed = cfg.seed;
  return mh;
}

double upper_bound(std::vector<double> values, double level) {
  if (values.empty()) throw Error(ErrorKind::EmptySamples, "no values for a bound");
  if (!std::is_sorted(values.begin(), values.end())) std::sort(values.begin(), values.end());
  const double k_real = std::ceil(level * static_cast<double>(values.size()) - 1e-9);
  const auto k = static_cast<std::size_t>(std::clamp(k_real, 1.0, static_cast<double>(values.size())));
  return values[k - 1];
}

CoverageReport coverage_study(const StudyConfig& cfg) {
  validate(cfg);
  const int reps = cfg.replicates;
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(reps));

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::min(reps, cfg.threads > 0 ? cfg.threads : static_cast<int>(hw));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r = next++; r < reps; r = next++) outcomes[static_cast<std::size_t>(r)] = run_replicate(cfg, r);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  CoverageReport report;
  report.config = cfg;
  report.config_hash = config_hash(cfg);
  report.replicates_requested = reps;
  double acceptance = 0.0;
  for (const auto& o : outcomes) {
    if (o.ok) {
      ++report.replicates_ok;
      acceptance += o.acceptance;
    } else {
      report.failures.push_back(o.failure);
    }
  }
  if (report.replicates_ok > 0) report.mean_acceptance = acceptance / report.replicates_ok;

  const auto names = functional_names(cfg);
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
      CoverageEntry e;
      e.functional = names[j];
      e.nominal = cfg.levels[l];
      e.replicates = report.replicates_ok;
      int hits = 0;
      for (const auto& o : outcomes) {
        if (o.ok && o.covered[j][l]) ++hits;
      }
      if (e.replicates > 0) e.empirical = static_cast<double>(hits) / e.replicates;
      if (e.replicates >= 2) e.standard_error = std::sqrt(e.empirical * (1.0 - e.empirical) / e.replicates);
      report.entries.push_back(e);
    }
  }
  return report;
}

void to_json(json& j, const CoverageReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"functional", e.functional},
                       {"nominal", e.nominal},
                       {"empirical", e.empirical},
                       {"replicates", e.replicates},
                       {"standard_error", e.standard_error ? json(*e.standard_error) : json(nullptr)}});
  }
  json failures = json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"replicate", f.replicate}, {"kind", f.kind}, {"message", f.message}});
  }
  j = json{{"config_hash", report.config_hash},
           {"seed", report.config.seed},
           {"config", report.config},
           {"replicates_requested", report.replicates_requested},
           {"replicates_ok", report.replicates_ok},
           {"failed_replicates", static_cast<int>(report.failures.size())},
           {"failures", failures},
           {"mean_acceptance", report.mean_acceptance},
           {"entries", entries}};
  j["config"].erase("output_dir");
  j["config"].erase("threads");
}

void write_report_json(const CoverageReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << json(report).dump(2) << '\n';
}

void write_report_csv(const CoverageReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << header_line(report.config) << '\n';
  out << "functional,nominal,empirical,replicates,standard_error\n";
  for (const auto& e : report.entries) {
    out << e.functional << ',' << format_double(e.nominal) << ',' << format_double(e.empirical) << ','
        << e.replicates << ',' << (e.standard_error ? format_double(*e.standard_error) : "") << '\n';
  }
}

void write_samples_csv(const Matrix& samples, const StudyConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << header_line(cfg) << '\n';
  for (Eigen::Index c = 0; c < samples.cols(); ++c) out << (c ? "," : "") << "theta" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < samples.cols(); ++c) out << (c ? "," : "") << format_double(samples(r, c));
    out << '\n';
  }
}

}  // namespace cgfd
