#include "polarcov/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polarcov::prob {

namespace {

void check_distribution(std::span<const double> p) {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw ValidationError("pmf entries must be finite and nonnegative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValidationError("pmf must sum to 1 within 1e-12, got " +
                          std::to_string(sum));
  }
}

}  // namespace

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h < 0.0 ? 0.0 : h;
}

double entropy_bits_unnormalized(std::span<const double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double v : w) {
    if (v > 0.0) h -= v * std::log2(v / total);
  }
  h /= total;
  return h < 0.0 ? 0.0 : h;
}

double kl_bits(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: alphabet mismatch");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) return kInfinity;
      d += p[i] * std::log2(p[i] / q[i]);
    }
  }
  return d < 0.0 ? 0.0 : d;
}

double variational(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DimensionError("variational_distance: shape mismatch");
  }
  double v = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) v += std::abs(p[i] - q[i]);
  return v;
}

Pmf::Pmf(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw ValidationError("pmf must be nonempty");
  check_distribution(p_);
}

Pmf Pmf::uniform(std::size_t size) {
  if (size == 0) throw ValidationError("pmf must be nonempty");
  return Pmf(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Pmf Pmf::point_mass(std::size_t size, std::size_t at) {
  std::vector<double> p(size, 0.0);
  p.at(at) = 1.0;
  return Pmf(std::move(p));
}

double Pmf::min_prob() const {
  return *std::min_element(p_.begin(), p_.end());
}

double entropy(const Pmf& p) { return entropy_bits(p.values()); }

double kl_divergence(const Pmf& p, const Pmf& q) {
  return kl_bits(p.values(), q.values());
}

double variational_distance(const Pmf& p, const Pmf& q) {
  return variational(p.values(), q.values());
}

JointPmf::JointPmf(std::vector<std::size_t> dims, std::vector<double> p)
    : dims_(std::move(dims)), p_(std::move(p)) {
  if (dims_.empty()) throw ValidationError("joint pmf needs at least one axis");
  std::size_t expect = 1;
  for (std::size_t d : dims_) {
    if (d == 0) throw ValidationError("joint pmf axis of size zero");
    expect *= d;
  }
  if (expect != p_.size()) {
    throw DimensionError("joint pmf table size does not match axis sizes");
  }
  check_distribution(p_);
}

JointPmf JointPmf::from_nested2(const std::vector<std::vector<double>>& t) {
  if (t.empty() || t[0].empty()) {
    throw ValidationError("joint table must be nonempty");
  }
  const std::size_t rows = t.size();
  const std::size_t cols = t[0].size();
  std::vector<double> flat;
  flat.reserve(rows * cols);
  for (const auto& row : t) {
    if (row.size() != cols) throw DimensionError("ragged joint table");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return JointPmf({rows, cols}, std::move(flat));
}

JointPmf JointPmf::product(const Pmf& a, const Pmf& b) {
  std::vector<double> flat(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      flat[i * b.size() + j] = a[i] * b[j];
    }
  }
  return JointPmf({a.size(), b.size()}, std::move(flat));
}

std::size_t JointPmf::flatten(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) {
    throw DimensionError("index rank mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    if (index[a] >= dims_[a]) throw DimensionError("index out of range");
    flat = flat * dims_[a] + index[a];
  }
  return flat;
}

double JointPmf::at(std::span<const std::size_t> index) const {
  return p_[flatten(index)];
}

JointPmf JointPmf::marginal(std::span<const std::size_t> axes) const {
  for (std::size_t a : axes) {
    if (a >= dims_.size()) throw DimensionError("marginal axis out of range");
  }
  std::vector<std::size_t> out_dims;
  out_dims.reserve(axes.size());
  for (std::size_t a : axes) out_dims.push_back(dims_[a]);
  std::size_t out_size = 1;
  for (std::size_t d : out_dims) out_size *= d;

  std::vector<double> out(out_size, 0.0);
  std::vector<std::size_t> idx(dims_.size(), 0);
  for (std::size_t flat = 0; flat < p_.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = dims_.size(); a-- > 0;) {
      idx[a] = rem % dims_[a];
      rem /= dims_[a];
    }
    std::size_t of = 0;
    for (std::size_t a : axes) of = of * dims_[a] + idx[a];
    out[of] += p_[flat];
  }
  return JointPmf(std::move(out_dims), std::move(out));
}

Pmf JointPmf::marginal_pmf(std::size_t axis) const {
  const std::size_t ax[] = {axis};
  JointPmf m = marginal(ax);
  std::vector<double> p(m.values().begin(), m.values().end());
  // Clamp tiny negative rounding away; marginal sums preserve the total.
  for (double& v : p) v = std::max(v, 0.0);
  return Pmf(std::move(p));
}

double entropy(const JointPmf& j) { return entropy_bits(j.values()); }

double kl_divergence(const JointPmf& p, const JointPmf& q) {
  if (p.dims() != q.dims()) throw DimensionError("joint shape mismatch");
  return kl_bits(p.values(), q.values());
}

double variational_distance(const JointPmf& p, const JointPmf& q) {
  if (p.dims() != q.dims()) throw DimensionError("joint shape mismatch");
  return variational(p.values(), q.values());
}

double mutual_information(const JointPmf& j, std::span<const std::size_t> group_a,
                          std::span<const std::size_t> group_b) {
  if (group_a.empty() || group_b.empty()) {
    throw DimensionError("mutual information needs two nonempty axis groups");
  }
  for (std::size_t a : group_a) {
    for (std::size_t b : group_b) {
      if (a == b) throw DimensionError("axis groups must be disjoint");
    }
  }
  std::vector<std::size_t> both(group_a.begin(), group_a.end());
  both.insert(both.end(), group_b.begin(), group_b.end());
  const double h_a = entropy(j.marginal(group_a));
  const double h_b = entropy(j.marginal(group_b));
  const double h_ab = entropy(j.marginal(both));
  const double mi = h_a + h_b - h_ab;
  return mi < 0.0 ? 0.0 : mi;
}

TypeHistogram::TypeHistogram(std::size_t x_size, std::size_t y_size)
    : x_size_(x_size), y_size_(y_size), counts_(x_size * y_size, 0) {
  if (x_size == 0 || y_size == 0) {
    throw ValidationError("type histogram needs nonempty alphabets");
  }
}

void TypeHistogram::add(const field::SymbolVector& x,
                        const field::SymbolVector& y) {
  if (x.size() != y.size()) {
    throw DimensionError("joint type requires equal sequence lengths");
  }
  for (std::size_t i = 0; i < x.size(); ++i) add_pair(x[i], y[i]);
}

void TypeHistogram::add_pair(std::uint16_t x, std::uint16_t y) {
  if (x >= x_size_ || y >= y_size_) {
    throw DimensionError("symbol outside histogram alphabet");
  }
  ++counts_[static_cast<std::size_t>(x) * y_size_ + y];
  ++total_;
}

void TypeHistogram::merge(const TypeHistogram& other) {
  if (other.x_size_ != x_size_ || other.y_size_ != y_size_) {
    throw DimensionError("histogram alphabet mismatch");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

std::uint64_t TypeHistogram::count(std::size_t x, std::size_t y) const {
  return counts_.at(x * y_size_ + y);
}

double TypeHistogram::frequency(std::size_t x, std::size_t y) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(count(x, y)) / static_cast<double>(total_);
}

JointPmf TypeHistogram::frequencies() const {
  if (total_ == 0) {
    throw ValidationError("empty histogram has no frequency distribution");
  }
  std::vector<double> p(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    p[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  }
  return JointPmf({x_size_, y_size_}, std::move(p));
}

TypeHistogram joint_type(const field::SymbolVector& x,
                         const field::SymbolVector& y) {
  TypeHistogram t(x.modulus(), y.modulus());
  t.add(x, y);
  return t;
}

double variational_distance(const JointPmf& target, const TypeHistogram& type) {
  return variational_distance(target, type.frequencies());
}

bool BoundReport::all_hold() const {
  for (const auto& row : rows) {
    if (row.applicable && !row.holds) return false;
  }
  return true;
}

namespace {

// lhs <= rhs with a relative slack for rounding; infinities compare exactly.
bool leq_with_slack(double lhs, double rhs) {
  if (std::isinf(rhs)) return true;
  if (std::isinf(lhs)) return false;
  return lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs));
}

}  // namespace

BoundReport divergence_bounds(const Pmf& p, const Pmf& q, const Pmf* r,
                              const JointPmf* joint) {
  if (p.size() != q.size()) {
    throw DimensionError("divergence_bounds: alphabet mismatch");
  }
  BoundReport report;

  const double d_pq = kl_divergence(p, q);
  const double d_qp = kl_divergence(q, p);
  const double mu_q = q.min_prob();

  {
    BoundRow row;
    row.name = "symmetry";
    if (mu_q <= 0.0) {
      row.applicable = false;
    } else {
      row.lhs = d_pq;
      row.rhs = std::log2(1.0 / mu_q) * std::sqrt(kTwoLn2) * std::sqrt(d_qp);
      row.holds = leq_with_slack(row.lhs, row.rhs);
    }
    report.rows.push_back(row);
  }

  if (r != nullptr) {
    if (r->size() != p.size()) {
      throw DimensionError("divergence_bounds: alphabet mismatch for r");
    }
    BoundRow row;
    row.name = "triangle";
    if (mu_q <= 0.0) {
      row.applicable = false;
    } else {
      const double a = std::min(kl_divergence(p, *r), kl_divergence(*r, p));
      const double b = std::min(kl_divergence(q, *r), kl_divergence(*r, q));
      row.lhs = d_pq;
      row.rhs = std::log2(1.0 / mu_q) * std::sqrt(kTwoLn2) *
                (std::sqrt(a) + std::sqrt(b));
      row.holds = leq_with_slack(row.lhs, row.rhs);
    }
    report.rows.push_back(row);
  }

  {
    BoundRow row;
    row.name = "entropy-difference";
    row.lhs = std::abs(entropy(q) - entropy(p));
    const double d_min = std::min(d_pq, d_qp);
    const double d =
        std::isfinite(d_min) ? std::sqrt(kTwoLn2) * std::sqrt(d_min) : kInfinity;
    // -x log x is increasing only up to 1/e; outside that region the
    // relation is not claimed, so it is skipped rather than audited.
    if (d == 0.0) {
      row.rhs = 0.0;
      row.holds = row.lhs <= 1e-12;
    } else if (d <= std::exp(-1.0)) {
      row.rhs = d * std::log2(static_cast<double>(p.size()) / d);
      row.holds = leq_with_slack(row.lhs, row.rhs);
    } else {
      row.applicable = false;
    }
    report.rows.push_back(row);
  }

  if (joint != nullptr) {
    BoundRow row;
    row.name = "independence-identity";
    const std::size_t k = joint->rank();
    // Left side: divergence from the product of marginals.
    std::vector<double> prod(joint->flat_size(), 1.0);
    std::vector<Pmf> marg;
    marg.reserve(k);
    for (std::size_t a = 0; a < k; ++a) marg.push_back(joint->marginal_pmf(a));
    std::vector<std::size_t> idx(k, 0);
    for (std::size_t flat = 0; flat < joint->flat_size(); ++flat) {
      std::size_t rem = flat;
      double pr = 1.0;
      for (std::size_t a = k; a-- > 0;) {
        idx[a] = rem % joint->dim(a);
        rem /= joint->dim(a);
      }
      for (std::size_t a = 0; a < k; ++a) pr *= marg[a][idx[a]];
      prod[flat] = pr;
    }
    row.lhs = kl_bits(joint->values(), prod);
    // Right side: sum of mutual informations against growing prefixes.
    double rhs = 0.0;
    std::vector<std::size_t> prefix;
    prefix.push_back(0);
    for (std::size_t i = 1; i < k; ++i) {
      const std::size_t cur[] = {i};
      rhs += mutual_information(*joint, cur, prefix);
      prefix.push_back(i);
    }
    row.rhs = rhs;
    row.holds = std::abs(row.lhs - row.rhs) <= 1e-10;
    report.rows.push_back(row);
  }

  return report;
}

namespace {

// Regularized lower incomplete gamma P(a, x) by series; upper Q(a, x) by
// continued fraction. Standard formulations, double precision.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi_square_survival(double stat, double dof) {
  if (stat <= 0.0) return 1.0;
  if (dof <= 0.0) throw ValidationError("chi-square needs positive dof");
  const double a = dof / 2.0;
  const double x = stat / 2.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

}  // namespace polarcov::prob
