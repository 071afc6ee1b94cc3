#include "polarcov/scsample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace polarcov::sc {

FrozenPlan FrozenPlan::all(std::size_t n, Rule rule) {
  FrozenPlan plan;
  plan.rules.assign(n, rule);
  plan.frozen.assign(n, 0);
  return plan;
}

void FrozenPlan::freeze(std::span<const std::uint32_t> indices,
                        std::span<const std::uint16_t> values) {
  if (indices.size() != values.size()) {
    throw DimensionError("freeze: index/value length mismatch");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    rules.at(indices[i]) = Rule::Frozen;
    frozen.at(indices[i]) = values[i];
  }
}

void FrozenPlan::assign(std::span<const std::uint32_t> indices, Rule rule) {
  for (std::uint32_t i : indices) rules.at(i) = rule;
}

std::size_t FrozenPlan::count(Rule rule) const {
  return static_cast<std::size_t>(
      std::count(rules.begin(), rules.end(), rule));
}

std::vector<std::uint32_t> FrozenPlan::open_indices() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < rules.size(); ++i) {
    if (rules[i] != Rule::Frozen) out.push_back(i);
  }
  return out;
}

void FrozenPlan::validate(std::uint16_t q) const {
  if (rules.size() != frozen.size()) {
    throw ValidationError("plan rule/frozen arrays must have equal length");
  }
  if (rules.empty()) throw ValidationError("plan covers no indices");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i] == Rule::Frozen && frozen[i] >= q) {
      throw ValidationError("frozen symbol outside [0, q) at index " +
                            std::to_string(i));
    }
  }
}

ScEngine::ScEngine(const prob::JointPmf& joint, std::size_t polarized_axis,
                   std::vector<Track> tracks, int n)
    : n_(n), tracks_(std::move(tracks)), axis_dims_(joint.dims()) {
  if (n < 0 || n > 20) throw ValidationError("unsupported transform order n");
  if (polarized_axis >= joint.rank()) {
    throw DimensionError("polarized axis out of range");
  }
  q_ = joint.dim(polarized_axis);
  if (!field::is_prime(static_cast<std::uint32_t>(q_))) {
    throw ValidationError("polarized alphabet size must be prime");
  }
  N_ = static_cast<std::size_t>(1) << n;
  if (tracks_.empty()) throw ValidationError("engine needs at least one track");

  for (const Track& t : tracks_) {
    std::size_t side_size = 1;
    std::vector<std::size_t> axes = t.side_axes;
    for (std::size_t a : axes) {
      if (a >= joint.rank() || a == polarized_axis) {
        throw DimensionError("track side axis invalid");
      }
      side_size *= joint.dim(a);
    }
    axes.push_back(polarized_axis);
    prob::JointPmf m = joint.marginal(axes);
    std::vector<double> tbl(m.values().begin(), m.values().end());
    base_tables_.push_back(std::move(tbl));
    base_side_sizes_.push_back(side_size);
  }

  const std::size_t K = tracks_.size();
  ws_minus_.resize(static_cast<std::size_t>(n) + 1);
  ws_plus_.resize(static_cast<std::size_t>(n) + 1);
  ws_prefix_.resize(static_cast<std::size_t>(n) + 1);
  for (int l = 1; l <= n; ++l) {
    const std::size_t half = static_cast<std::size_t>(1) << (l - 1);
    ws_minus_[static_cast<std::size_t>(l)].assign(K * half * q_, 0.0);
    ws_plus_[static_cast<std::size_t>(l)].assign(K * half * q_, 0.0);
    ws_prefix_[static_cast<std::size_t>(l)].assign(half, 0);
  }
  top_leaves_.assign(K * N_ * q_, 0.0);
}

std::span<const double> ScEngine::StepView::posterior(std::size_t t) const {
  if (t >= tracks_) throw DimensionError("track index out of range");
  const double* v = leaves_ + t * stride_;
  double sum = 0.0;
  for (std::size_t x = 0; x < q_; ++x) sum += v[x];
  if (!(sum > 0.0)) {
    throw ImpossiblePrefixError(
        "conditional law requested for a zero-probability prefix");
  }
  return {v, q_};
}

namespace {

// Normalizes a length-q slice in place; zero vectors are left untouched.
inline void normalize_slice(double* v, std::size_t q) {
  double sum = 0.0;
  for (std::size_t x = 0; x < q; ++x) sum += v[x];
  if (sum > 0.0) {
    const double inv = 1.0 / sum;
    for (std::size_t x = 0; x < q; ++x) v[x] *= inv;
  }
}

}  // namespace

void ScEngine::run_pass(
    const std::vector<std::vector<std::uint16_t>>& side_values,
    Visitor& visitor, std::vector<std::uint16_t>& u_out) {
  const std::size_t K = tracks_.size();
  u_out.assign(N_, 0);

  for (std::size_t t = 0; t < K; ++t) {
    const Track& track = tracks_[t];
    for (std::size_t a : track.side_axes) {
      if (a >= side_values.size() || side_values[a].size() != N_) {
        throw DimensionError(
            "missing or mis-sized side sequence for conditioned axis " +
            std::to_string(a));
      }
    }
    for (std::size_t i = 0; i < N_; ++i) {
      std::size_t side_flat = 0;
      for (std::size_t a : track.side_axes) {
        const std::uint16_t s = side_values[a][i];
        if (s >= axis_dims_[a]) {
          throw DimensionError("side symbol outside its axis alphabet");
        }
        side_flat = side_flat * axis_dims_[a] + s;
      }
      const double* src = base_tables_[t].data() + side_flat * q_;
      double* dst = top_leaves_.data() + (t * N_ + i) * q_;
      std::copy(src, src + q_, dst);
      normalize_slice(dst, q_);
    }
  }

  walk(n_, top_leaves_.data(), 0, visitor, u_out);
}

void ScEngine::walk(int level, const double* leaves, std::size_t base,
                    Visitor& visitor, std::vector<std::uint16_t>& u_out) {
  const std::size_t K = tracks_.size();
  const std::size_t M = static_cast<std::size_t>(1) << level;
  const std::size_t parent_stride = M * q_;

  if (level == 0) {
    StepView view(leaves, parent_stride, q_, K);
    const std::uint16_t chosen = visitor.on_index(base, view);
    if (chosen >= q_) {
      throw ValidationError("visitor chose a symbol outside [0, q)");
    }
    u_out[base] = chosen;
    return;
  }

  const std::size_t half = M / 2;
  const std::size_t child_stride = half * q_;
  const std::size_t lvl = static_cast<std::size_t>(level);

  // Pair sums: position i combines with position i + half.
  double* minus = ws_minus_[lvl].data();
  for (std::size_t t = 0; t < K; ++t) {
    const double* lo = leaves + t * parent_stride;
    double* out = minus + t * child_stride;
    for (std::size_t i = 0; i < half; ++i) {
      const double* a = lo + i * q_;
      const double* b = lo + (i + half) * q_;
      double* dst = out + i * q_;
      for (std::size_t s = 0; s < q_; ++s) dst[s] = 0.0;
      for (std::size_t x2 = 0; x2 < q_; ++x2) {
        const double w = b[x2];
        if (w == 0.0) continue;
        // sum = x1 + x2, so x1 = sum - x2
        std::size_t x1 = (q_ - x2) % q_;
        for (std::size_t s = 0; s < q_; ++s) {
          dst[s] += a[x1] * w;
          ++x1;
          if (x1 == q_) x1 = 0;
        }
      }
      normalize_slice(dst, q_);
    }
  }
  walk(level - 1, minus, base, visitor, u_out);

  // Lower half fixed; recover the pair sums it encodes.
  std::vector<std::uint16_t>& sums = ws_prefix_[lvl];
  std::copy(u_out.begin() + static_cast<std::ptrdiff_t>(base),
            u_out.begin() + static_cast<std::ptrdiff_t>(base + half),
            sums.begin());
  field::polar_inverse_inplace({sums.data(), half},
                               static_cast<std::uint16_t>(q_));

  double* plus = ws_plus_[lvl].data();
  for (std::size_t t = 0; t < K; ++t) {
    const double* lo = leaves + t * parent_stride;
    double* out = plus + t * child_stride;
    for (std::size_t i = 0; i < half; ++i) {
      const double* a = lo + i * q_;
      const double* b = lo + (i + half) * q_;
      double* dst = out + i * q_;
      const std::size_t sum = sums[i];
      for (std::size_t x2 = 0; x2 < q_; ++x2) {
        dst[x2] = a[(sum + q_ - x2) % q_] * b[x2];
      }
      normalize_slice(dst, q_);
    }
  }
  walk(level - 1, plus, base + half, visitor, u_out);
}

namespace {

struct PrefixProbe final : ScEngine::Visitor {
  const field::SymbolVector* prefix;
  std::size_t target;
  std::size_t track;
  std::vector<double> captured;
  bool done = false;

  std::uint16_t on_index(std::size_t index, const ScEngine::StepView& view) override {
    if (index == target) {
      auto p = view.posterior(track);
      captured.assign(p.begin(), p.end());
      done = true;
      // Remaining indices are walked with an arbitrary symbol; the capture
      // at `target` is unaffected by anything after it.
      return 0;
    }
    if (index < target) return (*prefix)[index];
    return 0;
  }
};

struct PlanSampler final : ScEngine::Visitor {
  const FrozenPlan* plan;
  Rng* rng;
  std::size_t track_true = SIZE_MAX;
  std::size_t track_noside = SIZE_MAX;
  std::size_t q = 0;
  bool record = false;
  SamplePath* path;

  std::uint16_t on_index(std::size_t index, const ScEngine::StepView& view) override {
    const Rule rule = plan->rules[index];
    std::uint16_t chosen = 0;
    switch (rule) {
      case Rule::Frozen:
        return plan->frozen[index];
      case Rule::SampleTrue: {
        auto p = view.posterior(track_true);
        chosen = static_cast<std::uint16_t>(rng->sample_weights(p));
        if (record) path->posteriors[index] = prob::Pmf({p.begin(), p.end()});
        break;
      }
      case Rule::SampleNoSide: {
        auto p = view.posterior(track_noside);
        chosen = static_cast<std::uint16_t>(rng->sample_weights(p));
        if (record) path->posteriors[index] = prob::Pmf({p.begin(), p.end()});
        break;
      }
      case Rule::SampleUniform:
        chosen = static_cast<std::uint16_t>(
            rng->uniform_below(static_cast<std::uint32_t>(q)));
        break;
      case Rule::ArgmaxNoSide: {
        auto p = view.posterior(track_noside);
        chosen = static_cast<std::uint16_t>(
            std::max_element(p.begin(), p.end()) - p.begin());
        if (record) path->posteriors[index] = prob::Pmf({p.begin(), p.end()});
        break;
      }
    }
    path->trace.push_back(chosen);
    return chosen;
  }
};

}  // namespace

prob::Pmf sc_posterior(const prob::JointPmf& joint, std::size_t polarized_axis,
                       const std::optional<Conditioning>& side,
                       const field::SymbolVector& u_prefix, std::size_t index,
                       int n) {
  if (n < 0) throw ValidationError("negative transform order");
  const std::size_t N = static_cast<std::size_t>(1) << n;
  if (index >= N) throw DimensionError("index beyond sequence length");
  if (u_prefix.size() != index) {
    throw DimensionError("prefix length must equal the target index");
  }
  if (u_prefix.modulus() != joint.dim(polarized_axis)) {
    throw DimensionError("prefix modulus does not match the polarized axis");
  }

  std::vector<ScEngine::Track> tracks;
  std::vector<std::vector<std::uint16_t>> side_values(joint.rank());
  if (side.has_value()) {
    if (side->axes.size() != side->sequences.size()) {
      throw DimensionError("conditioning axes/sequences mismatch");
    }
    tracks.push_back({side->axes});
    for (std::size_t i = 0; i < side->axes.size(); ++i) {
      const auto& seq = side->sequences[i];
      if (seq.size() != N) {
        throw DimensionError("side sequence length must equal 2^n");
      }
      side_values[side->axes[i]].assign(seq.values().begin(),
                                        seq.values().end());
    }
  } else {
    tracks.push_back({{}});
  }

  ScEngine engine(joint, polarized_axis, std::move(tracks), n);
  PrefixProbe probe;
  probe.prefix = &u_prefix;
  probe.target = index;
  probe.track = 0;
  std::vector<std::uint16_t> u_out;
  engine.run_pass(side_values, probe, u_out);
  return prob::Pmf(std::move(probe.captured));
}

SamplePath sc_sample(const prob::JointPmf& joint, std::size_t polarized_axis,
                     const std::optional<Conditioning>& side,
                     const FrozenPlan& plan, Rng& rng,
                     const SampleOptions& options) {
  const std::size_t N = plan.size();
  std::size_t n = 0;
  while ((static_cast<std::size_t>(1) << n) < N) ++n;
  if ((static_cast<std::size_t>(1) << n) != N) {
    throw LengthError("plan length must be a power of two");
  }
  const auto q = static_cast<std::uint16_t>(joint.dim(polarized_axis));
  plan.validate(q);

  const bool needs_true = plan.count(Rule::SampleTrue) > 0;
  const bool needs_noside = plan.count(Rule::SampleNoSide) > 0 ||
                            plan.count(Rule::ArgmaxNoSide) > 0;
  if (needs_true && !side.has_value()) {
    throw ValidationError("plan draws with side information but none given");
  }

  std::vector<ScEngine::Track> tracks;
  PlanSampler sampler;
  if (needs_true) {
    sampler.track_true = tracks.size();
    tracks.push_back({side->axes});
  }
  if (needs_noside) {
    sampler.track_noside = tracks.size();
    tracks.push_back({{}});
  }
  if (tracks.empty()) tracks.push_back({{}});  // all frozen or uniform

  std::vector<std::vector<std::uint16_t>> side_values(joint.rank());
  if (side.has_value()) {
    if (side->axes.size() != side->sequences.size()) {
      throw DimensionError("conditioning axes/sequences mismatch");
    }
    for (std::size_t i = 0; i < side->axes.size(); ++i) {
      const auto& seq = side->sequences[i];
      if (seq.size() != N) {
        throw DimensionError("side sequence length must equal plan length");
      }
      side_values[side->axes[i]].assign(seq.values().begin(),
                                        seq.values().end());
    }
  }

  ScEngine engine(joint, polarized_axis, std::move(tracks),
                  static_cast<int>(n));

  SamplePath path{field::SymbolVector::zeros(N, q), {}, {}};
  if (options.record_posteriors) path.posteriors.resize(N);
  path.trace.reserve(plan.open_indices().size());

  sampler.plan = &plan;
  sampler.rng = &rng;
  sampler.q = q;
  sampler.record = options.record_posteriors;
  sampler.path = &path;

  std::vector<std::uint16_t> u_out;
  engine.run_pass(side_values, sampler, u_out);
  for (std::size_t i = 0; i < N; ++i) path.u.set(i, u_out[i]);
  return path;
}

field::SymbolVector replay(const FrozenPlan& plan,
                           std::span<const std::uint16_t> trace,
                           std::uint16_t q) {
  plan.validate(q);
  const auto open = plan.open_indices();
  if (trace.size() != open.size()) {
    throw ReplayError("trace length " + std::to_string(trace.size()) +
                      " does not cover the plan's " +
                      std::to_string(open.size()) + " open indices");
  }
  field::SymbolVector u = field::SymbolVector::zeros(plan.size(), q);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan.rules[i] == Rule::Frozen) u.set(i, plan.frozen[i]);
  }
  for (std::size_t t = 0; t < open.size(); ++t) {
    if (trace[t] >= q) throw ReplayError("trace symbol outside [0, q)");
    u.set(open[t], trace[t]);
  }
  return u;
}

}  // namespace polarcov::sc
