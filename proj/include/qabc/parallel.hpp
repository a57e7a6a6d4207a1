#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace qabc {

/// Worker count: QABC_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Runs fn(0..n-1) across workers. Tasks must write only to their own slot;
/// callers reduce the slots in index order, so results never depend on the
/// number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream (a, b) under a master seed. Every parallel loop keys its
/// generators by work-item indices, never by worker id.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) ^ (b * 0xd1342543de82ef95ULL));
}

using Rng = std::mt19937_64;

}  // namespace qabc
