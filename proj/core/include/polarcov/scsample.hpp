#pragma once
// Exact successive-cancellation conditional laws and randomized sampling.
//
// The engine walks the transformed indices 0..N-1 in order. At each index it
// can produce, for one or more "tracks", the exact conditional distribution
// of the transformed symbol given the already-fixed prefix and that track's
// side-information sequences. A track is a conditioning choice: no side
// information, or a subset of the joint's axes with realized sequences.
//
// The recursion mirrors the transform's half-split structure: the first half
// of the indices is the transform of the componentwise pair sums (positions
// i and i+M/2 combine), the second half is the transform of the upper
// components given the sums recovered from the already-fixed lower half.
// Likelihood vectors are renormalized at every node, which cancels in the
// posteriors and keeps N = 2^10 passes away from underflow.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "polarcov/common.hpp"
#include "polarcov/field.hpp"
#include "polarcov/prob.hpp"

namespace polarcov::sc {

// Side information for a conditional track: realized sequences, one per
// conditioned axis of the joint, each of length N.
struct Conditioning {
  std::vector<std::size_t> axes;
  std::vector<field::SymbolVector> sequences;
};

enum class Rule : std::uint8_t {
  Frozen,         // fixed symbol, consumes no randomness
  SampleTrue,     // draw from the conditional law given prefix and side
  SampleNoSide,   // draw from the conditional law given the prefix only
  SampleUniform,  // draw uniformly over the alphabet
  ArgmaxNoSide,   // deterministic variant: most likely symbol, ties toward
                  // the smallest value; consumes no randomness
};

// Per-index rule assignment covering all N indices.
struct FrozenPlan {
  std::vector<Rule> rules;
  std::vector<std::uint16_t> frozen;  // parallel to rules, used where Frozen

  static FrozenPlan all(std::size_t n, Rule rule);
  void freeze(std::span<const std::uint32_t> indices,
              std::span<const std::uint16_t> values);
  void assign(std::span<const std::uint32_t> indices, Rule rule);

  std::size_t size() const noexcept { return rules.size(); }
  std::size_t count(Rule rule) const;
  // Indices not ruled Frozen, ascending; the trace covers exactly these.
  std::vector<std::uint32_t> open_indices() const;
  void validate(std::uint16_t q) const;
};

struct SamplePath {
  field::SymbolVector u;
  // Chosen symbols at non-frozen indices, in index order. Replaying this
  // against the same plan reproduces u exactly.
  std::vector<std::uint16_t> trace;
  // Posteriors the draws came from (only when requested via options).
  std::vector<std::optional<prob::Pmf>> posteriors;
};

struct SampleOptions {
  bool record_posteriors = false;
};

// Exact conditional distribution of the transformed symbol at `index` given
// a fixed prefix (length `index`) and, optionally, side sequences. The
// transform covers N = 2^n positions; the law at an index depends on N.
// Throws ImpossiblePrefixError when the prefix has probability zero.
prob::Pmf sc_posterior(const prob::JointPmf& joint, std::size_t polarized_axis,
                       const std::optional<Conditioning>& side,
                       const field::SymbolVector& u_prefix, std::size_t index,
                       int n);

// Walks all indices applying the plan: frozen symbols verbatim, sampled
// symbols from the designated exact posterior.
SamplePath sc_sample(const prob::JointPmf& joint, std::size_t polarized_axis,
                     const std::optional<Conditioning>& side,
                     const FrozenPlan& plan, Rng& rng,
                     const SampleOptions& options = {});

// Deterministic reconstruction from a symbol trace: frozen positions from
// the plan, open positions from the trace in index order.
field::SymbolVector replay(const FrozenPlan& plan,
                           std::span<const std::uint16_t> trace,
                           std::uint16_t q);

// Low-level engine shared by sc_sample and the Monte Carlo profiler.
class ScEngine {
 public:
  struct Track {
    std::vector<std::size_t> side_axes;  // empty = unconditioned
  };

  ScEngine(const prob::JointPmf& joint, std::size_t polarized_axis,
           std::vector<Track> tracks, int n);

  std::size_t q() const noexcept { return q_; }
  std::size_t num_indices() const noexcept { return N_; }
  std::size_t num_tracks() const noexcept { return tracks_.size(); }

  class StepView {
   public:
    // Normalized conditional law of the current index under track `t`.
    std::span<const double> posterior(std::size_t t) const;

   private:
    friend class ScEngine;
    StepView(const double* leaves, std::size_t track_stride, std::size_t q,
             std::size_t tracks)
        : leaves_(leaves), stride_(track_stride), q_(q), tracks_(tracks) {}
    const double* leaves_;
    std::size_t stride_, q_, tracks_;
  };

  struct Visitor {
    virtual std::uint16_t on_index(std::size_t index, const StepView& view) = 0;
    virtual ~Visitor() = default;
  };

  // side_values[axis] must hold the realized length-N sequence for every
  // axis referenced by some track; other axes may be left empty.
  void run_pass(const std::vector<std::vector<std::uint16_t>>& side_values,
                Visitor& visitor, std::vector<std::uint16_t>& u_out);

 private:
  void walk(int level, const double* leaves, std::size_t base,
            Visitor& visitor, std::vector<std::uint16_t>& u_out);

  std::size_t q_ = 0;
  std::size_t N_ = 0;
  int n_ = 0;
  std::vector<Track> tracks_;
  std::vector<std::size_t> axis_dims_;
  // Per track: [side_flat][symbol] base likelihood table.
  std::vector<std::vector<double>> base_tables_;
  std::vector<std::size_t> base_side_sizes_;
  // Workspace per level: child leaf buffers and prefix scratch.
  std::vector<std::vector<double>> ws_minus_, ws_plus_;
  std::vector<std::vector<std::uint16_t>> ws_prefix_;
  std::vector<double> top_leaves_;
};

}  // namespace polarcov::sc
