#pragma once

#include "cgfd/samplers.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace cgfd {

struct SphereCompareOptions {
  int resolution = 400;
  int hmc_samples = 20000;
  int mh_samples = 200000;
  std::uint64_t seed = 1;
};

/// Octant probabilities on the unit sphere from four routes: grid quadrature
/// of the constrained kernel, grid quadrature of the polar-chart GFD, HMC and
/// MH (each chain discards its first half).
struct SphereCompareTable {
  static constexpr std::array<const char*, 4> routes{"quadrature_cgfd", "quadrature_parameterized",
                                                     "hmc", "mh"};
  std::array<std::string, 8> octants;  // sign pattern such as "+-+"
  Matrix masses;                       // 8 x 4
  double max_discrepancy = 0.0;        // over all route pairs
  double quadrature_discrepancy = 0.0; // routes 0 and 1 only
  Diagnostics hmc;
  Diagnostics mh;
};

/// Octant index 0..7 from the coordinate signs (bit c set when mu_c < 0).
int octant_of(const Vector& mu);

SphereCompareTable sphere_compare(const Matrix& data, const SphereCompareOptions& opts);

void to_json(nlohmann::json& j, const SphereCompareTable& table);

}  // namespace cgfd
