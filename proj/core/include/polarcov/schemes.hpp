#pragma once
// The three end-to-end protocols built on successive-cancellation sampling:
//
//   resolvability: freeze the very-high set of the input's transform with
//     shared randomness (the side-independent part recycled across blocks),
//     draw the rest from the exact prefix conditionals, push through the
//     channel;
//   empirical coordination: node 1 freezes the side-very-high set with
//     recycled common randomness, draws the message positions with its
//     observed actions as side information, and ships the message plus the
//     low-entropy draw trace to node 2, which reassembles deterministically;
//   strong coordination: same block structure on an auxiliary middle
//     variable, followed by node-2 channel simulation using local
//     randomness on the output's very-high set.
//
// Recycled frozen content is identical across all k blocks; fresh frozen
// content and every draw use per-block substreams of the master seed.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polarcov/common.hpp"
#include "polarcov/field.hpp"
#include "polarcov/polarize.hpp"
#include "polarcov/prob.hpp"
#include "polarcov/scsample.hpp"

namespace polarcov::schemes {

enum class SchemeKind { Resolvability, Empirical, Strong };

std::string scheme_name(SchemeKind kind);
SchemeKind scheme_from_name(const std::string& name);

// Discrete memoryless channel as a row-stochastic matrix.
struct Dmc {
  std::size_t in_size = 0;
  std::size_t out_size = 0;
  std::vector<double> rows;  // row-major [input][output]

  Dmc(std::size_t in, std::size_t out, std::vector<double> table);
  std::span<const double> row(std::size_t x) const;

  // Conditional law of `out_axis` given `in_axis`. Inputs with zero target
  // mass get a uniform row so simulated inputs outside the target's support
  // still transmit.
  static Dmc from_joint(const prob::JointPmf& joint, std::size_t in_axis,
                        std::size_t out_axis);
  static Dmc binary_symmetric(double crossover);
  static Dmc identity(std::size_t q);
};

field::SymbolVector dmc_transmit(const field::SymbolVector& x, const Dmc& ch,
                                 Rng& rng);

// Source-spec builders so profiles are always computed with the axis and
// side conventions the schemes expect.
polarize::SourceSpec resolvability_source(const prob::JointPmf& joint_xy);
polarize::SourceSpec empirical_source(const prob::JointPmf& joint_xy);
polarize::SourceSpec strong_source_middle(const prob::JointPmf& joint_xvy);
polarize::SourceSpec strong_source_output(const prob::JointPmf& joint_xvy);

struct ResolvabilityContext {
  prob::JointPmf joint;  // (X, Y); X prime and polarized, Y the channel output
  int n = 0;
  polarize::PolarProfile profile;  // side group 0 = {Y}
  polarize::IndexSet very_high;            // near-uniform unconditioned
  polarize::IndexSet very_high_given_out;  // near-uniform given the output
  polarize::IndexSet fresh_set;            // very_high minus the recycled set
  polarize::IndexSet high;                 // non-negligible unconditioned
  Dmc channel;
  // Variant switch: decide the negligible-entropy positions (outside the
  // high set) by most-likely symbol instead of drawing them. Default keeps
  // every open position randomized.
  bool argmax_low_entropy = false;
};

ResolvabilityContext make_resolvability_context(
    const prob::JointPmf& joint_xy, int n,
    const polarize::PolarProfile& profile, double delta_v, double delta_h,
    bool argmax_low_entropy = false);

struct EmpiricalContext {
  prob::JointPmf joint;  // (X, Y); Y prime and polarized with side X
  int n = 0;
  polarize::PolarProfile profile;  // side group 0 = {X}
  polarize::IndexSet very_high_given_side;  // recycled common randomness
  polarize::IndexSet high;                  // message support
  polarize::IndexSet message_set;           // high minus very_high_given_side
  polarize::IndexSet trace_set;             // complement of high
};

EmpiricalContext make_empirical_context(const prob::JointPmf& joint_xy, int n,
                                        const polarize::PolarProfile& profile,
                                        double delta_v, double delta_h);

struct StrongContext {
  prob::JointPmf joint;  // (X, V, Y), Markov through V; V and Y prime
  int n = 0;
  polarize::PolarProfile profile_middle;  // V polarized; sides {X}, {X,Y}
  polarize::PolarProfile profile_output;  // Y polarized; side {V}
  polarize::FPartition f;
  polarize::IndexSet high_middle;           // H over the middle transform
  polarize::IndexSet very_high_given_x;     // f2 + f3
  polarize::IndexSet very_high_given_xy;    // f2
  polarize::IndexSet local_uniform_set;     // output very-high given V
};

StrongContext make_strong_context(const prob::JointPmf& joint_xvy, int n,
                                  const polarize::PolarProfile& profile_middle,
                                  const polarize::PolarProfile& profile_output,
                                  double delta_v, double delta_h);

struct EmpiricalEncodeResult {
  std::vector<std::uint16_t> message;  // transformed symbols on message_set
  std::vector<std::uint16_t> trace;    // draws on trace_set, index order
  field::SymbolVector u;
};

EmpiricalEncodeResult empirical_encode(const EmpiricalContext& ctx,
                                       const field::SymbolVector& x_block,
                                       std::span<const std::uint16_t> c1,
                                       Rng& rng);

// Deterministic reassembly; returns node 2's action block.
field::SymbolVector empirical_decode(const EmpiricalContext& ctx,
                                     std::span<const std::uint16_t> message,
                                     std::span<const std::uint16_t> c1,
                                     std::span<const std::uint16_t> trace);

struct StrongEncodeResult {
  std::vector<std::uint16_t> message;  // transformed symbols on f4
  std::vector<std::uint16_t> trace;    // draws on f1, index order
  field::SymbolVector u;
};

StrongEncodeResult strong_encode(const StrongContext& ctx,
                                 const field::SymbolVector& x_block,
                                 std::span<const std::uint16_t> cbar,
                                 std::span<const std::uint16_t> c_i, Rng& rng);

struct StrongDecodeResult {
  field::SymbolVector v;  // reconstructed middle block (deterministic)
  field::SymbolVector y;  // simulated action block
  std::vector<std::uint16_t> local_trace;  // channel-simulation draws
};

StrongDecodeResult strong_decode(const StrongContext& ctx,
                                 std::span<const std::uint16_t> message,
                                 std::span<const std::uint16_t> cbar,
                                 std::span<const std::uint16_t> c_i,
                                 std::span<const std::uint16_t> trace,
                                 Rng& local_rng);

// Exact count of uniform symbols consumed, by attribution.
struct RandomnessLedger {
  std::uint64_t shared_recycled = 0;   // recycled frozen symbols, counted once
  std::uint64_t shared_fresh = 0;      // per-block frozen symbols
  std::uint64_t transmitted_trace = 0; // randomized draws carried to node 2
  std::uint64_t local_uniform = 0;     // uniform local draws
  std::uint64_t local_conditional = 0; // conditional draws kept local
};

struct BlockRecord {
  field::SymbolVector x;  // resolvability: channel input; coordination: actions
  field::SymbolVector u;
  std::optional<field::SymbolVector> v;  // strong only
  std::optional<field::SymbolVector> y;  // channel output / node-2 actions
  std::vector<std::uint16_t> fresh;
  std::vector<std::uint16_t> message;
  std::vector<std::uint16_t> trace;
  std::vector<std::uint16_t> local_trace;
};

struct Transcript {
  SchemeKind kind = SchemeKind::Resolvability;
  int n = 0;
  int k = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint16_t> cbar;
  std::vector<BlockRecord> blocks;
  RandomnessLedger ledger;

  std::string to_json() const;
};

// k-block drivers. Substreams: stream 0 seeds the recycled randomness,
// stream 1+i everything inside block i, stream 1000000+i node-2 local
// randomness for block i.
Transcript run_resolvability(const ResolvabilityContext& ctx, int k,
                             std::uint64_t seed);
Transcript run_empirical(const EmpiricalContext& ctx, int k,
                         std::uint64_t seed);
Transcript run_strong(const StrongContext& ctx, int k, std::uint64_t seed);

// One named rate: the realized finite-N value (as a fraction of indices and
// in bits per source symbol) next to its large-N target.
struct RateRow {
  std::string name;
  double fraction = 0.0;
  double bits = 0.0;
  double target_bits = 0.0;
};

struct RateReport {
  std::vector<RateRow> rows;
  const RateRow& row(const std::string& name) const;
};

RateReport rate_report(const ResolvabilityContext& ctx, int k);
RateReport rate_report(const EmpiricalContext& ctx, int k);
RateReport rate_report(const StrongContext& ctx, int k);

}  // namespace polarcov::schemes
