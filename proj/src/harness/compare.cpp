#include "cgfd/harness/compare.hpp"

#include "cgfd/models/sphere.hpp"
#include "cgfd/quadrature.hpp"

#include <cmath>

namespace cgfd {

int octant_of(const Vector& mu) {
  int idx = 0;
  for (int c = 0; c < 3; ++c) {
    if (mu(c) < 0.0) idx |= 1 << c;
  }
  return idx;
}

namespace {

Vector octant_masses(const GridDensity& density) {
  Vector out(8);
  for (int o = 0; o < 8; ++o) {
    out(o) = region_mass(density, [o](const Vector& mu) { return octant_of(mu) == o; });
  }
  return out;
}

Vector octant_frequencies(const Matrix& samples) {
  Vector out = Vector::Zero(8);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) out(octant_of(samples.row(i).transpose())) += 1.0;
  if (samples.rows() > 0) out /= static_cast<double>(samples.rows());
  return out;
}

}  // namespace

SphereCompareTable sphere_compare(const Matrix& data, const SphereCompareOptions& opts) {
  if (data.cols() != 3) throw Error(ErrorKind::BadShape, "sphere comparison needs 3-d data");
  const ConstrainedModel cm = sphere_model(data);
  auto chart = std::make_shared<const SpherePolarChart>();

  SphereCompareTable table;
  for (int o = 0; o < 8; ++o) {
    std::string s;
    for (int c = 0; c < 3; ++c) s += (o >> c) & 1 ? '-' : '+';
    table.octants[static_cast<std::size_t>(o)] = s;
  }
  table.masses.resize(8, 4);

  const GridDensity direct = normalize_on_chart(
      [&](const Vector& mu) { return cgfd_log_kernel(*cm.model, *cm.manifold, mu); }, chart,
      opts.resolution);
  const GridDensity param = normalize_in_chart_coords(
      [&](const Vector& u) { return parameterized_gfd_log_kernel(*cm.model, *chart, u); }, chart,
      opts.resolution);
  table.masses.col(0) = octant_masses(direct);
  table.masses.col(1) = octant_masses(param);

  const CgfdTarget target(cm);
  Vector init = data.colwise().mean().transpose();
  if (init.norm() == 0.0) init = Vector::Unit(3, 0);
  init.normalize();

  HmcConfig hmc = default_hmc_config(3);
  hmc.seed = opts.seed;
  const ChainResult hmc_run = run_chain(target, init, hmc, {opts.hmc_samples, opts.hmc_samples / 2, 1});
  MhConfig mh = default_mh_config(2);
  mh.seed = opts.seed;
  const ChainResult mh_run = run_chain(target, init, mh, {opts.mh_samples, opts.mh_samples / 2, 1}, 1);
  table.masses.col(2) = octant_frequencies(hmc_run.samples);
  table.masses.col(3) = octant_frequencies(mh_run.samples);
  table.hmc = hmc_run.diagnostics;
  table.mh = mh_run.diagnostics;

  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const double gap = (table.masses.col(a) - table.masses.col(b)).cwiseAbs().maxCoeff();
      table.max_discrepancy = std::max(table.max_discrepancy, gap);
    }
  }
  table.quadrature_discrepancy = (table.masses.col(0) - table.masses.col(1)).cwiseAbs().maxCoeff();
  return table;
}

void to_json(nlohmann::json& j, const SphereCompareTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (int o = 0; o < 8; ++o) {
    nlohmann::json row{{"octant", table.octants[static_cast<std::size_t>(o)]}};
    for (int r = 0; r < 4; ++r) row[SphereCompareTable::routes[static_cast<std::size_t>(r)]] = table.masses(o, r);
    rows.push_back(row);
  }
  j = nlohmann::json{{"octants", rows},
                     {"max_discrepancy", table.max_discrepancy},
                     {"quadrature_discrepancy", table.quadrature_discrepancy},
                     {"hmc_diagnostics", table.hmc},
                     {"mh_diagnostics", table.mh}};
}

}  // namespace cgfd
