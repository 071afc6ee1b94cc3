#pragma once
// Polarized conditional-entropy profiles and the threshold-derived index
// sets every scheme is configured from.
//
// A profile records, for each transformed index j, the conditional entropy
// of that index given its prefix, and given the prefix plus each declared
// side-information group. Index sets pick out the near-uniform positions
// ("very high", h > log2(q) - delta_v) and the non-negligible positions
// ("high", h > delta_h), with strict inequalities.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polarcov/common.hpp"
#include "polarcov/prob.hpp"

namespace polarcov::polarize {

inline constexpr std::size_t kDefaultExactBudget = std::size_t{1} << 24;

// Which axis of a joint gets transformed, and which axis groups act as side
// information. For three-variable sources the Markov flag asserts the
// X -> V -> Y factorization with axes ordered (X, V, Y).
struct SourceSpec {
  prob::JointPmf joint;
  std::size_t polarized_axis = 0;
  std::vector<std::vector<std::size_t>> side_groups;
  bool markov_xvy = false;

  std::size_t q() const { return joint.dim(polarized_axis); }
  void validate() const;
};

struct PolarProfile {
  enum class Method { Exact, MonteCarlo };

  int n = 0;
  std::size_t alphabet = 0;
  Method method = Method::Exact;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> h_uncond;
  std::vector<std::vector<double>> h_cond;  // one entry per side group
  std::vector<double> se_uncond;            // all zero for exact profiles
  std::vector<std::vector<double>> se_cond;

  std::size_t size() const noexcept { return h_uncond.size(); }
  double log2_alphabet() const;
  void validate() const;

  std::string to_json() const;
  static PolarProfile from_json(const std::string& text);
  void save(const std::string& path) const;
  static PolarProfile load(const std::string& path);
};

// Exact profile via dynamic programming over the transform butterfly. The
// DP state is the joint law of (symbol, conditioning context); contexts
// with identical posteriors merge, so structured sources stay small. The
// budget caps the context table size; past it, use mc_profile.
PolarProfile exact_profile(const SourceSpec& spec, int n,
                           std::size_t budget = kDefaultExactBudget);

// Definition-level profile by full enumeration of (sequence, side) joint
// tables. Independent of the butterfly DP; intended as a cross-check at
// N <= 8.
PolarProfile enumerated_profile(const SourceSpec& spec, int n);

// Genie-aided Monte Carlo profile: sample source sequences, run the exact
// successive-cancellation recursion along the true path, and average the
// per-index posterior entropies. Unbiased; per-index standard errors are
// reported. Deterministic given (samples, seed), whatever the worker count.
PolarProfile mc_profile(const SourceSpec& spec, int n, std::uint64_t samples,
                        std::uint64_t seed);

using IndexSet = std::vector<std::uint32_t>;  // ascending, 0-based

IndexSet set_difference(const IndexSet& a, const IndexSet& b);
IndexSet set_complement(const IndexSet& a, std::size_t n);
bool is_subset(const IndexSet& a, const IndexSet& b);

// Partition used by the strong-coordination scheme:
//   f1 = complement of the high set,
//   f2 = very-high set under the larger conditioning,
//   f3 = very-high under the smaller conditioning minus f2,
//   f4 = high set minus the very-high set under the smaller conditioning.
struct FPartition {
  IndexSet f1, f2, f3, f4;
};

struct IndexSets {
  double delta_v = 0.0;
  double delta_h = 0.0;
  IndexSet v_uncond, h_uncond;
  std::vector<IndexSet> v_cond, h_cond;  // per side group
  // Assembled when the profile has exactly two conditionings, read as
  // (smaller, larger), e.g. (given X, given X and Y).
  std::optional<FPartition> f;

  std::string to_json() const;
};

// Thresholds are strict: V = { j : h[j] > log2(q) - delta_v },
// H = { j : h[j] > delta_h }. Rejects delta_v + delta_h >= log2(q), which
// could break V within H.
IndexSets index_sets(const PolarProfile& profile, double delta_v,
                     double delta_h);

std::uint32_t smallest_prime_geq(std::uint32_t m);

// Finite-length threshold preset 2^(-N^beta), beta < 1/2.
double paper_delta(int n, double beta);

}  // namespace polarcov::polarize
