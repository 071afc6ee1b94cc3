#pragma once
// Shared plumbing: error taxonomy, deterministic random streams, chunked
// parallel execution, content hashing.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polarcov {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Invalid parameters or malformed configuration.
struct ValidationError : Error {
  using Error::Error;
};
// Mismatched shapes or alphabets.
struct DimensionError : Error {
  using Error::Error;
};
// Vector length is not a power of two.
struct LengthError : Error {
  using Error::Error;
};
// Exact computation would exceed the configured enumeration budget.
struct BudgetError : Error {
  using Error::Error;
};
// Conditioning on an event of probability zero.
struct ImpossiblePrefixError : Error {
  using Error::Error;
};
// Trace incompatible with the plan it is replayed against.
struct ReplayError : Error {
  using Error::Error;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. Uniform doubles and bounded integers are
// derived from raw 64-bit engine output, never through std:: distributions,
// so sequences are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  // Independent substream addressed by (master, stream).
  static Rng derive(std::uint64_t master, std::uint64_t stream) {
    return Rng(splitmix64(master ^ splitmix64(stream + 0x51ed2701ULL)));
  }

  std::uint64_t next_u64() { return eng_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound). Multiply-shift; bias is negligible for
  // the alphabet sizes used here.
  std::uint32_t uniform_below(std::uint32_t bound) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(eng_()) * bound) >> 64);
  }

  // Inverse-CDF draw from an unnormalized nonnegative weight vector.
  // Zero-weight atoms are never returned. Throws if all weights are zero.
  std::uint32_t sample_weights(std::span<const double> w);

 private:
  std::mt19937_64 eng_;
};

// Worker count for parallel sections: POLARCOV_THREADS if set, otherwise
// hardware concurrency. Always at least 1.
std::size_t worker_count();

// Runs fn(i) for i in [0, total) across workers. fn must write only to
// per-index state; completion order is unspecified.
void parallel_for(std::size_t total, const std::function<void(std::size_t)>& fn);

// FNV-1a 64-bit content hash, hex encoded. Fingerprints artifacts.
std::string fnv1a64_hex(std::string_view data);

}  // namespace polarcov
