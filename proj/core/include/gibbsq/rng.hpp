#ifndef GIBBSQ_RNG_HPP_
#define GIBBSQ_RNG_HPP_

#include <cstdint>
#include <random>

namespace gibbsq {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream number `index` under `master`.
///
/// Every parallel unit of work (replication, bootstrap resample, posterior
/// draw) seeds its own generator with derive_seed(parent, index), so results
/// do not depend on thread count or scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace gibbsq

#endif  // GIBBSQ_RNG_HPP_
