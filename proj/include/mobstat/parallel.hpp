#pragma once

// Serial/OpenMP execution switch shared by the data-parallel kernels.
//
// Every kernel partitions its index range into fixed-size chunks and combines
// per-chunk partial results in chunk order, so the OpenMP path produces the
// same bits as the serial reference regardless of thread count.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <type_traits>
#include <utility>
#include <vector>

namespace mobstat {

enum class Execution { serial, parallel };

namespace parallel {

inline constexpr std::size_t kChunkSize = 4096;

/// SplitMix64 finalizer; derives independent stream seeds from (seed, stream).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kChunkSize) {
  return (n + chunk - 1) / chunk;
}

/// Calls body(i) for every i in [0, count). An exception thrown by any body is
/// rethrown on the calling thread; with several, the one from the lowest index.
template <typename Body>
void for_each_index(std::size_t count, Execution exec, Body&& body) {
  const auto n = static_cast<std::ptrdiff_t>(count);
  if (exec == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    return;
  }
  std::exception_ptr error;
  std::ptrdiff_t error_index = n;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(mobstat_for_each_index)
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Runs fn(rng, i) for i in [0, count), each replicate with its own generator
/// seeded by derive_seed(seed, i). Results are returned in replicate order.
template <typename Fn>
auto replicate(std::size_t count, std::uint64_t seed, Fn&& fn, Execution exec = Execution::parallel) {
  using Result = decltype(fn(std::declval<std::mt19937_64&>(), std::size_t{}));
  // vector<bool> packs bits, so concurrent writes to neighbours would race.
  using Slot = std::conditional_t<std::is_same_v<Result, bool>, unsigned char, Result>;
  std::vector<Slot> out(count);
  for_each_index(count, exec, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    out[i] = fn(rng, i);
  });
  return out;
}

}  // namespace parallel
}  // namespace mobstat
