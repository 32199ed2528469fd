#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace csmspec {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Counter-based seed splitting:
///   derive_seed(master, counter) = splitmix64(master + (counter + 1) * 0x9E3779B97F4A7C15)
/// Every stage, rollout, cell and resample gets its own generator seeded this
/// way, so results never depend on scheduling or worker count.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) noexcept;

inline Rng make_rng(std::uint64_t master, std::uint64_t counter) {
  return Rng(derive_seed(master, counter));
}

/// Stage identifiers for the workbench's master-seed split.
namespace stage {
inline constexpr std::uint64_t kData = 0;
inline constexpr std::uint64_t kKernel = 1;
inline constexpr std::uint64_t kCollapse = 2;
inline constexpr std::uint64_t kBootstrap = 3;
inline constexpr std::uint64_t kTree = 4;
inline constexpr std::uint64_t kPolyLogistic = 5;
inline constexpr std::uint64_t kRollouts = 6;
inline constexpr std::uint64_t kSimulate = 7;
inline constexpr std::uint64_t kAdiabatic = 8;
}  // namespace stage

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled exactly once; callers write into per-index slots and reduce in
/// index order afterwards. Exceptions from the body are rethrown (lowest index first).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace csmspec
