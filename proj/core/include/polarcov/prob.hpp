#pragma once
// Probability primitives: finite pmfs, joint pmfs backed by a row-major
// tensor, empirical joint types, entropies, Kullback-Leibler divergence and
// variational distance, and the divergence relations used by every bound
// audit in this project.
//
// Conventions, used consistently everywhere:
//   - all information quantities are in bits (log base 2),
//   - D(p||q) = +infinity when some q(x) = 0 < p(x),
//   - variational distance is the UNHALVED L1 distance, in [0, 2].

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polarcov/common.hpp"
#include "polarcov/field.hpp"

namespace polarcov::prob {

inline constexpr double kSumTolerance = 1e-12;
inline constexpr double kTwoLn2 = 1.3862943611198906;  // 2 ln 2
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Shannon entropy in bits with the 0 log 0 = 0 convention. Accepts any
// nonnegative vector summing to 1 within tolerance.
double entropy_bits(std::span<const double> p);

// Entropy of an unnormalized nonnegative weight vector, i.e. the entropy of
// w / sum(w), times nothing. Returns 0 for a zero vector.
double entropy_bits_unnormalized(std::span<const double> w);

double kl_bits(std::span<const double> p, std::span<const double> q);
double variational(std::span<const double> p, std::span<const double> q);

// Probability mass function over the alphabet [0, size).
class Pmf {
 public:
  explicit Pmf(std::vector<double> p);
  static Pmf uniform(std::size_t size);
  static Pmf point_mass(std::size_t size, std::size_t at);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }

  // Smallest atom (mu_q). Zero when the support is not full.
  double min_prob() const;

  bool operator==(const Pmf&) const = default;

 private:
  std::vector<double> p_;
};

double entropy(const Pmf& p);
double kl_divergence(const Pmf& p, const Pmf& q);
double variational_distance(const Pmf& p, const Pmf& q);

// Joint distribution over a small tuple of finite axes, row-major.
class JointPmf {
 public:
  JointPmf(std::vector<std::size_t> dims, std::vector<double> p);
  static JointPmf from_nested2(const std::vector<std::vector<double>>& t);
  static JointPmf product(const Pmf& a, const Pmf& b);

  std::size_t rank() const noexcept { return dims_.size(); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t flat_size() const noexcept { return p_.size(); }
  std::span<const double> values() const noexcept { return p_; }

  double at_flat(std::size_t idx) const { return p_[idx]; }
  double at(std::span<const std::size_t> index) const;
  std::size_t flatten(std::span<const std::size_t> index) const;

  // Marginal over the listed axes, kept in the listed order.
  JointPmf marginal(std::span<const std::size_t> axes) const;
  Pmf marginal_pmf(std::size_t axis) const;

  bool operator==(const JointPmf&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> p_;
};

double entropy(const JointPmf& j);
double kl_divergence(const JointPmf& p, const JointPmf& q);
double variational_distance(const JointPmf& p, const JointPmf& q);

// I(A; B) in bits between two disjoint axis groups of a joint.
double mutual_information(const JointPmf& j, std::span<const std::size_t> group_a,
                          std::span<const std::size_t> group_b);

// Empirical joint type of paired sequences over X x Y. Counts accumulate
// across blocks; frequencies always refer to the total length seen so far.
class TypeHistogram {
 public:
  TypeHistogram(std::size_t x_size, std::size_t y_size);

  void add(const field::SymbolVector& x, const field::SymbolVector& y);
  void add_pair(std::uint16_t x, std::uint16_t y);
  void merge(const TypeHistogram& other);

  std::size_t total() const noexcept { return total_; }
  std::uint64_t count(std::size_t x, std::size_t y) const;
  double frequency(std::size_t x, std::size_t y) const;
  JointPmf frequencies() const;

 private:
  std::size_t x_size_, y_size_;
  std::vector<std::uint64_t> counts_;
  std::size_t total_ = 0;
};

TypeHistogram joint_type(const field::SymbolVector& x,
                         const field::SymbolVector& y);

// V(q, T) between a target joint over X x Y and an empirical type.
double variational_distance(const JointPmf& target, const TypeHistogram& type);

// One audited relation: both sides evaluated, verdict recorded. A relation
// that cannot be evaluated (zero-mass reference atom, outside the small-
// divergence region) is reported as not applicable rather than failed.
struct BoundRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool applicable = true;
  bool holds = true;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  bool all_hold() const;
};

// Evaluates the divergence relations between p and q (plus r and a joint
// when given):
//   symmetry:     D(p||q) <= log2(1/mu_q) sqrt(2 ln 2) sqrt(D(q||p))
//   triangle:     D(p||q) <= log2(1/mu_q) sqrt(2 ln 2)
//                   [sqrt(min(D(p||r), D(r||p))) + sqrt(min(D(q||r), D(r||q)))]
//   entropy-diff: |H(q) - H(p)| <= d log2(|X|/d),
//                   d = sqrt(2 ln 2) sqrt(min(D(p||q), D(q||p))),
//                   applicable only when d <= 1/e
//   independence: D(p_{X1..Xk} || prod p_{Xi}) = sum_{i>=2} I(Xi; X_{1:i-1}),
//                   an exact identity, audited to 1e-10
BoundReport divergence_bounds(const Pmf& p, const Pmf& q,
                              const Pmf* r = nullptr,
                              const JointPmf* joint = nullptr);

// Survival function of the chi-square distribution (upper tail), via the
// regularized incomplete gamma function.
double chi_square_survival(double stat, double dof);

}  // namespace polarcov::prob
