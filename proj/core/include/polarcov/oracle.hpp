#pragma once
// Brute-force ground truth for tiny instances. Induced laws are enumerated
// from raw joint-distribution definitions: conditional draw probabilities
// come from prefix-marginal tables built by summing iid product weights over
// whole source words, never from the successive-cancellation engine or the
// profile DP. Agreement between this module and those is evidence.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarcov/common.hpp"
#include "polarcov/field.hpp"
#include "polarcov/polarize.hpp"
#include "polarcov/prob.hpp"
#include "polarcov/schemes.hpp"
#include "polarcov/scsample.hpp"

namespace polarcov::oracle {

inline constexpr std::size_t kDefaultOracleBudget = std::size_t{1} << 26;

struct VarDesc {
  std::string name;
  std::size_t size = 0;
};

// Exhaustive weighted outcome table over a small tuple of variables (each
// block of N symbols is flattened into one variable of size q^N).
class EnumeratedLaw {
 public:
  explicit EnumeratedLaw(std::vector<VarDesc> vars,
                         std::size_t budget = kDefaultOracleBudget);

  const std::vector<VarDesc>& vars() const noexcept { return vars_; }
  std::size_t var_id(const std::string& name) const;
  std::size_t flat_size() const noexcept { return w_.size(); }

  void add(std::span<const std::size_t> values, double weight);
  double total() const;
  void normalize();
  void validate() const;

  // Marginal over the named variables, kept in the listed order.
  prob::JointPmf marginal(std::span<const std::string> names) const;
  double mutual_information(std::span<const std::string> group_a,
                            std::span<const std::string> group_b) const;

 private:
  std::vector<VarDesc> vars_;
  std::vector<double> w_;
};

// iid product laws flattened to block variables, for use as targets.
prob::JointPmf iid_block(const prob::Pmf& p, int copies);
// (X, Y) pairs iid across positions, flattened to two block variables.
prob::JointPmf iid_pair_block(const prob::JointPmf& joint_xy, int copies);

// Law of one plan-driven block. Variables: optionally the side block
// ("side"), then the sampled block ("block", inverse-transformed when
// emit_inverse is set, the raw transformed word otherwise). Frozen positions
// listed in average_frozen are integrated over uniform symbols; other frozen
// positions keep their plan values.
struct PlanLawOptions {
  bool emit_inverse = true;
  polarize::IndexSet average_frozen;
};

EnumeratedLaw enumerate_plan_law(const prob::JointPmf& joint,
                                 std::size_t polarized_axis,
                                 std::optional<std::size_t> side_axis,
                                 const sc::FrozenPlan& plan, int n,
                                 const PlanLawOptions& options,
                                 std::size_t budget = kDefaultOracleBudget);

// Single-block induced laws. Variables: resolvability ("x", "y"), empirical
// coordination ("x", "y"), strong coordination ("x", "v", "y"). All frozen
// randomness is integrated out uniformly.
EnumeratedLaw enumerate_induced(const schemes::ResolvabilityContext& ctx,
                                std::size_t budget = kDefaultOracleBudget);
EnumeratedLaw enumerate_induced(const schemes::EmpiricalContext& ctx,
                                std::size_t budget = kDefaultOracleBudget);
EnumeratedLaw enumerate_induced(const schemes::StrongContext& ctx,
                                std::size_t budget = kDefaultOracleBudget);

// k-block output law for the block-Markov chain: variables "cbar",
// "y1".."yk". With recycle off, every block draws fresh frozen content and
// "cbar" is block 1's copy.
EnumeratedLaw enumerate_chain(const schemes::ResolvabilityContext& ctx, int k,
                              bool recycle = true,
                              std::size_t budget = kDefaultOracleBudget);

// Prefix conditional entropies of a flattened block variable: the exact
// H(U^j | U^{1:j-1}) sequence of the law's own block distribution.
std::vector<double> prefix_entropies(const EnumeratedLaw& law,
                                     const std::string& var, std::size_t q,
                                     std::size_t block_len);

struct OracleMetrics {
  double kl_target_vs_induced = 0.0;  // D(target || induced)
  double kl_induced_vs_target = 0.0;  // D(induced || target)
  double v_dist = 0.0;
};

// Exact divergences between the law's marginal over the named variables and
// a target with matching shape.
OracleMetrics exact_metrics(const EnumeratedLaw& law,
                            std::span<const std::string> names,
                            const prob::JointPmf& target);

// The computable core of each scheme's analysis: the enumerated divergence
// from the target must equal the profile deficit sum exactly.
struct IdentityAudit {
  double enumerated = 0.0;   // D(target || induced), by enumeration
  double profile_sum = 0.0;  // deficit sum from the conditional entropies
  bool holds = false;        // |difference| <= 1e-9
};

IdentityAudit divergence_identity_audit(
    const schemes::ResolvabilityContext& ctx,
    std::size_t budget = kDefaultOracleBudget);
IdentityAudit divergence_identity_audit(
    const schemes::EmpiricalContext& ctx,
    std::size_t budget = kDefaultOracleBudget);
IdentityAudit divergence_identity_audit(
    const schemes::StrongContext& ctx,
    std::size_t budget = kDefaultOracleBudget);

// Mismatched baseline for strong coordination: every transform position of
// the middle block frozen to uniform randomness (no side-informed draws),
// followed by the same output simulation. Variables: "x", "v", "y".
EnumeratedLaw enumerate_strong_baseline(const schemes::StrongContext& ctx,
                                        std::size_t budget = kDefaultOracleBudget);

}  // namespace polarcov::oracle
