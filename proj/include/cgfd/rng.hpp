#pragma once

#include <cstdint>
#include <random>

namespace cgfd {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` of a run seeded with `seed`.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace cgfd
