#include "polarcov/schemes.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace polarcov::schemes {

namespace {

using polarize::IndexSet;

std::vector<std::uint16_t> uniform_symbols(std::size_t count, std::size_t q,
                                           Rng& rng) {
  std::vector<std::uint16_t> out(count);
  for (auto& s : out) {
    s = static_cast<std::uint16_t>(
        rng.uniform_below(static_cast<std::uint32_t>(q)));
  }
  return out;
}

std::vector<std::uint16_t> gather(const field::SymbolVector& u,
                                  const IndexSet& at) {
  std::vector<std::uint16_t> out;
  out.reserve(at.size());
  for (std::uint32_t j : at) out.push_back(u[j]);
  return out;
}

// Trace symbols restricted to the plan positions carrying `rule`.
std::vector<std::uint16_t> trace_for_rule(const sc::FrozenPlan& plan,
                                          std::span<const std::uint16_t> trace,
                                          sc::Rule rule) {
  std::vector<std::uint16_t> out;
  std::size_t t = 0;
  for (std::size_t j = 0; j < plan.size(); ++j) {
    if (plan.rules[j] == sc::Rule::Frozen) continue;
    if (plan.rules[j] == rule) out.push_back(trace[t]);
    ++t;
  }
  return out;
}

field::SymbolVector draw_iid(const prob::Pmf& p, std::size_t len,
                             std::uint16_t q, Rng& rng) {
  std::vector<std::uint16_t> v(len);
  for (auto& s : v) {
    s = static_cast<std::uint16_t>(rng.sample_weights(p.values()));
  }
  return field::SymbolVector(std::move(v), q);
}

double entropy_sum(const std::vector<double>& h, const IndexSet& at) {
  double sum = 0.0;
  for (std::uint32_t j : at) sum += h[j];
  return sum;
}

}  // namespace

std::string scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Resolvability:
      return "resolvability";
    case SchemeKind::Empirical:
      return "empirical";
    case SchemeKind::Strong:
      return "strong";
  }
  return "unknown";
}

SchemeKind scheme_from_name(const std::string& name) {
  if (name == "resolvability") return SchemeKind::Resolvability;
  if (name == "empirical") return SchemeKind::Empirical;
  if (name == "strong") return SchemeKind::Strong;
  throw ValidationError("unknown scheme: " + name);
}

Dmc::Dmc(std::size_t in, std::size_t out, std::vector<double> table)
    : in_size(in), out_size(out), rows(std::move(table)) {
  if (in == 0 || out == 0 || rows.size() != in * out) {
    throw DimensionError("channel table size mismatch");
  }
  for (std::size_t x = 0; x < in; ++x) {
    double sum = 0.0;
    for (std::size_t y = 0; y < out; ++y) {
      const double v = rows[x * out + y];
      if (v < 0.0 || !std::isfinite(v)) {
        throw ValidationError("channel entries must be finite, nonnegative");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > prob::kSumTolerance) {
      throw ValidationError("channel row " + std::to_string(x) +
                            " does not sum to 1");
    }
  }
}

std::span<const double> Dmc::row(std::size_t x) const {
  if (x >= in_size) throw DimensionError("channel input out of range");
  return {rows.data() + x * out_size, out_size};
}

Dmc Dmc::from_joint(const prob::JointPmf& joint, std::size_t in_axis,
                    std::size_t out_axis) {
  const std::size_t axes[] = {in_axis, out_axis};
  const prob::JointPmf m = joint.marginal(axes);
  const std::size_t in = m.dim(0), out = m.dim(1);
  const prob::Pmf px = m.marginal_pmf(0);
  std::vector<double> rows(in * out, 0.0);
  for (std::size_t x = 0; x < in; ++x) {
    if (px[x] > 0.0) {
      double sum = 0.0;
      for (std::size_t y = 0; y < out; ++y) {
        rows[x * out + y] = m.at_flat(x * out + y) / px[x];
        sum += rows[x * out + y];
      }
      for (std::size_t y = 0; y < out; ++y) rows[x * out + y] /= sum;
    } else {
      for (std::size_t y = 0; y < out; ++y) {
        rows[x * out + y] = 1.0 / static_cast<double>(out);
      }
    }
  }
  return Dmc(in, out, std::move(rows));
}

Dmc Dmc::binary_symmetric(double crossover) {
  if (crossover < 0.0 || crossover > 1.0) {
    throw ValidationError("crossover must lie in [0, 1]");
  }
  return Dmc(2, 2, {1 - crossover, crossover, crossover, 1 - crossover});
}

Dmc Dmc::identity(std::size_t q) {
  std::vector<double> rows(q * q, 0.0);
  for (std::size_t x = 0; x < q; ++x) rows[x * q + x] = 1.0;
  return Dmc(q, q, std::move(rows));
}

field::SymbolVector dmc_transmit(const field::SymbolVector& x, const Dmc& ch,
                                 Rng& rng) {
  std::vector<std::uint16_t> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= ch.in_size) {
      throw DimensionError("channel input symbol outside alphabet");
    }
    y[i] = static_cast<std::uint16_t>(rng.sample_weights(ch.row(x[i])));
  }
  const std::uint16_t qy = static_cast<std::uint16_t>(ch.out_size);
  if (!field::is_prime(qy)) {
    // output alphabets need not be prime; symbol vectors insist, so fall
    // back to the next prime as carrier modulus
    return field::SymbolVector(std::move(y),
                               static_cast<std::uint16_t>(
                                   polarize::smallest_prime_geq(qy)));
  }
  return field::SymbolVector(std::move(y), qy);
}

polarize::SourceSpec resolvability_source(const prob::JointPmf& joint_xy) {
  if (joint_xy.rank() != 2) throw DimensionError("expected a two-axis joint");
  return polarize::SourceSpec{joint_xy, 0, {{1}}, false};
}

polarize::SourceSpec empirical_source(const prob::JointPmf& joint_xy) {
  if (joint_xy.rank() != 2) throw DimensionError("expected a two-axis joint");
  return polarize::SourceSpec{joint_xy, 1, {{0}}, false};
}

polarize::SourceSpec strong_source_middle(const prob::JointPmf& joint_xvy) {
  if (joint_xvy.rank() != 3) throw DimensionError("expected a three-axis joint");
  return polarize::SourceSpec{joint_xvy, 1, {{0}, {0, 2}}, true};
}

polarize::SourceSpec strong_source_output(const prob::JointPmf& joint_xvy) {
  if (joint_xvy.rank() != 3) throw DimensionError("expected a three-axis joint");
  return polarize::SourceSpec{joint_xvy, 2, {{1}}, true};
}

namespace {

void check_profile_shape(const polarize::PolarProfile& profile, int n,
                         std::size_t q, std::size_t side_groups) {
  if (profile.n != n) throw ValidationError("profile computed for another n");
  if (profile.alphabet != q) {
    throw ValidationError("profile alphabet does not match the joint");
  }
  if (profile.h_cond.size() != side_groups) {
    throw ValidationError("profile lacks the required conditionings");
  }
}

}  // namespace

ResolvabilityContext make_resolvability_context(
    const prob::JointPmf& joint_xy, int n,
    const polarize::PolarProfile& profile, double delta_v, double delta_h,
    bool argmax_low_entropy) {
  resolvability_source(joint_xy).validate();
  check_profile_shape(profile, n, joint_xy.dim(0), 1);
  const auto sets = polarize::index_sets(profile, delta_v, delta_h);
  if (!polarize::is_subset(sets.v_cond[0], sets.v_uncond)) {
    throw ValidationError(
        "side-conditioned very-high set escaped the unconditioned one; "
        "refine the profile");
  }
  ResolvabilityContext ctx{joint_xy,
                           n,
                           profile,
                           sets.v_uncond,
                           sets.v_cond[0],
                           polarize::set_difference(sets.v_uncond,
                                                    sets.v_cond[0]),
                           sets.h_uncond,
                           Dmc::from_joint(joint_xy, 0, 1),
                           argmax_low_entropy};
  return ctx;
}

EmpiricalContext make_empirical_context(const prob::JointPmf& joint_xy, int n,
                                        const polarize::PolarProfile& profile,
                                        double delta_v, double delta_h) {
  empirical_source(joint_xy).validate();
  check_profile_shape(profile, n, joint_xy.dim(1), 1);
  const auto sets = polarize::index_sets(profile, delta_v, delta_h);
  if (!polarize::is_subset(sets.v_cond[0], sets.h_uncond)) {
    throw ValidationError(
        "conditioned very-high set escaped the high set; refine the profile");
  }
  EmpiricalContext ctx{joint_xy,
                       n,
                       profile,
                       sets.v_cond[0],
                       sets.h_uncond,
                       polarize::set_difference(sets.h_uncond, sets.v_cond[0]),
                       polarize::set_complement(sets.h_uncond, profile.size())};
  return ctx;
}

StrongContext make_strong_context(const prob::JointPmf& joint_xvy, int n,
                                  const polarize::PolarProfile& profile_middle,
                                  const polarize::PolarProfile& profile_output,
                                  double delta_v, double delta_h) {
  strong_source_middle(joint_xvy).validate();
  check_profile_shape(profile_middle, n, joint_xvy.dim(1), 2);
  check_profile_shape(profile_output, n, joint_xvy.dim(2), 1);
  const auto sets_v = polarize::index_sets(profile_middle, delta_v, delta_h);
  if (!sets_v.f.has_value()) {
    throw ValidationError("middle profile did not yield a partition");
  }
  const auto sets_t = polarize::index_sets(profile_output, delta_v, delta_h);

  StrongContext ctx{joint_xvy,
                    n,
                    profile_middle,
                    profile_output,
                    *sets_v.f,
                    sets_v.h_uncond,
                    sets_v.v_cond[0],
                    sets_v.v_cond[1],
                    sets_t.v_cond[0]};
  return ctx;
}

EmpiricalEncodeResult empirical_encode(const EmpiricalContext& ctx,
                                       const field::SymbolVector& x_block,
                                       std::span<const std::uint16_t> c1,
                                       Rng& rng) {
  const std::size_t N = ctx.profile.size();
  if (x_block.size() != N) throw DimensionError("action block length mismatch");
  if (c1.size() != ctx.very_high_given_side.size()) {
    throw DimensionError("shared randomness must cover the recycled set");
  }

  sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  plan.assign(ctx.message_set, sc::Rule::SampleTrue);
  plan.freeze(ctx.very_high_given_side, c1);

  sc::Conditioning side{{0}, {x_block}};
  const auto path = sc::sc_sample(ctx.joint, 1, side, plan, rng);

  return EmpiricalEncodeResult{
      gather(path.u, ctx.message_set),
      trace_for_rule(plan, path.trace, sc::Rule::SampleNoSide), path.u};
}

field::SymbolVector empirical_decode(const EmpiricalContext& ctx,
                                     std::span<const std::uint16_t> message,
                                     std::span<const std::uint16_t> c1,
                                     std::span<const std::uint16_t> trace) {
  const std::size_t N = ctx.profile.size();
  const auto qy = static_cast<std::uint16_t>(ctx.joint.dim(1));
  if (message.size() != ctx.message_set.size()) {
    throw ReplayError("message does not cover the message set");
  }
  if (c1.size() != ctx.very_high_given_side.size()) {
    throw ReplayError("shared randomness does not cover the recycled set");
  }

  sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  plan.freeze(ctx.very_high_given_side, c1);
  plan.freeze(ctx.message_set, message);
  const field::SymbolVector u = sc::replay(plan, trace, qy);
  return field::polar_inverse(u);
}

StrongEncodeResult strong_encode(const StrongContext& ctx,
                                 const field::SymbolVector& x_block,
                                 std::span<const std::uint16_t> cbar,
                                 std::span<const std::uint16_t> c_i, Rng& rng) {
  const std::size_t N = ctx.profile_middle.size();
  if (x_block.size() != N) throw DimensionError("action block length mismatch");
  if (cbar.size() != ctx.f.f2.size() || c_i.size() != ctx.f.f3.size()) {
    throw DimensionError("frozen randomness does not match the partition");
  }

  sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  plan.assign(ctx.f.f4, sc::Rule::SampleTrue);
  plan.freeze(ctx.f.f2, cbar);
  plan.freeze(ctx.f.f3, c_i);

  sc::Conditioning side{{0}, {x_block}};
  const auto path = sc::sc_sample(ctx.joint, 1, side, plan, rng);

  return StrongEncodeResult{
      gather(path.u, ctx.f.f4),
      trace_for_rule(plan, path.trace, sc::Rule::SampleNoSide), path.u};
}

StrongDecodeResult strong_decode(const StrongContext& ctx,
                                 std::span<const std::uint16_t> message,
                                 std::span<const std::uint16_t> cbar,
                                 std::span<const std::uint16_t> c_i,
                                 std::span<const std::uint16_t> trace,
                                 Rng& local_rng) {
  const std::size_t N = ctx.profile_middle.size();
  const auto qv = static_cast<std::uint16_t>(ctx.joint.dim(1));
  if (message.size() != ctx.f.f4.size()) {
    throw ReplayError("message does not cover f4");
  }
  if (cbar.size() != ctx.f.f2.size() || c_i.size() != ctx.f.f3.size()) {
    throw ReplayError("frozen randomness does not match the partition");
  }

  sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  plan.freeze(ctx.f.f2, cbar);
  plan.freeze(ctx.f.f3, c_i);
  plan.freeze(ctx.f.f4, message);
  const field::SymbolVector u = sc::replay(plan, trace, qv);
  field::SymbolVector v = field::polar_inverse(u);

  // Channel simulation: uniform local draws on the output's very-high set,
  // exact conditionals elsewhere.
  sc::FrozenPlan sim = sc::FrozenPlan::all(N, sc::Rule::SampleTrue);
  sim.assign(ctx.local_uniform_set, sc::Rule::SampleUniform);
  sc::Conditioning side{{1}, {v}};
  const auto t_path = sc::sc_sample(ctx.joint, 2, side, sim, local_rng);

  StrongDecodeResult out{std::move(v), field::polar_inverse(t_path.u),
                         t_path.trace};
  return out;
}

Transcript run_resolvability(const ResolvabilityContext& ctx, int k,
                             std::uint64_t seed) {
  if (k < 1) throw ValidationError("need k >= 1 blocks");
  const std::size_t N = ctx.profile.size();
  const std::size_t qx = ctx.joint.dim(0);

  Transcript tr;
  tr.kind = SchemeKind::Resolvability;
  tr.n = ctx.n;
  tr.k = k;
  tr.seed = seed;

  Rng shared = Rng::derive(seed, 0);
  tr.cbar = uniform_symbols(ctx.very_high_given_out.size(), qx, shared);
  tr.ledger.shared_recycled = tr.cbar.size();

  for (int i = 0; i < k; ++i) {
    Rng blk = Rng::derive(seed, 1 + static_cast<std::uint64_t>(i));
    BlockRecord rec{field::SymbolVector::zeros(N, static_cast<std::uint16_t>(qx)),
                    field::SymbolVector::zeros(N, static_cast<std::uint16_t>(qx)),
                    std::nullopt,
                    std::nullopt,
                    {},
                    {},
                    {},
                    {}};

    rec.fresh = uniform_symbols(ctx.fresh_set.size(), qx, blk);
    tr.ledger.shared_fresh += rec.fresh.size();

    sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
    if (ctx.argmax_low_entropy) {
      plan.assign(polarize::set_complement(ctx.high, N),
                  sc::Rule::ArgmaxNoSide);
    }
    plan.freeze(ctx.very_high_given_out, tr.cbar);
    plan.freeze(ctx.fresh_set, rec.fresh);

    const auto path = sc::sc_sample(ctx.joint, 0, std::nullopt, plan, blk);
    tr.ledger.local_conditional += plan.count(sc::Rule::SampleNoSide);

    rec.u = path.u;
    rec.x = field::polar_inverse(path.u);
    rec.y = dmc_transmit(rec.x, ctx.channel, blk);
    tr.blocks.push_back(std::move(rec));
  }
  return tr;
}

Transcript run_empirical(const EmpiricalContext& ctx, int k,
                         std::uint64_t seed) {
  if (k < 1) throw ValidationError("need k >= 1 blocks");
  const std::size_t N = ctx.profile.size();
  const auto qx = static_cast<std::uint16_t>(ctx.joint.dim(0));
  const std::size_t qy = ctx.joint.dim(1);
  const prob::Pmf px = ctx.joint.marginal_pmf(0);

  Transcript tr;
  tr.kind = SchemeKind::Empirical;
  tr.n = ctx.n;
  tr.k = k;
  tr.seed = seed;

  Rng shared = Rng::derive(seed, 0);
  tr.cbar = uniform_symbols(ctx.very_high_given_side.size(), qy, shared);
  tr.ledger.shared_recycled = tr.cbar.size();

  const auto qx_carrier = static_cast<std::uint16_t>(
      field::is_prime(qx) ? qx : polarize::smallest_prime_geq(qx));

  for (int i = 0; i < k; ++i) {
    Rng blk = Rng::derive(seed, 1 + static_cast<std::uint64_t>(i));
    const field::SymbolVector x = draw_iid(px, N, qx_carrier, blk);

    auto enc = empirical_encode(ctx, x, tr.cbar, blk);
    tr.ledger.transmitted_trace += enc.trace.size();

    const field::SymbolVector y =
        empirical_decode(ctx, enc.message, tr.cbar, enc.trace);

    BlockRecord rec{x,  std::move(enc.u), std::nullopt, y, {}, std::move(enc.message),
                    std::move(enc.trace), {}};
    tr.blocks.push_back(std::move(rec));
  }
  return tr;
}

Transcript run_strong(const StrongContext& ctx, int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("need k >= 1 blocks");
  const std::size_t N = ctx.profile_middle.size();
  const auto qx = static_cast<std::uint16_t>(ctx.joint.dim(0));
  const std::size_t qv = ctx.joint.dim(1);
  const prob::Pmf px = ctx.joint.marginal_pmf(0);

  Transcript tr;
  tr.kind = SchemeKind::Strong;
  tr.n = ctx.n;
  tr.k = k;
  tr.seed = seed;

  Rng shared = Rng::derive(seed, 0);
  tr.cbar = uniform_symbols(ctx.f.f2.size(), qv, shared);
  tr.ledger.shared_recycled = tr.cbar.size();

  const auto qx_carrier = static_cast<std::uint16_t>(
      field::is_prime(qx) ? qx : polarize::smallest_prime_geq(qx));

  for (int i = 0; i < k; ++i) {
    Rng blk = Rng::derive(seed, 1 + static_cast<std::uint64_t>(i));
    Rng local = Rng::derive(seed, 1000000 + static_cast<std::uint64_t>(i));

    const field::SymbolVector x = draw_iid(px, N, qx_carrier, blk);
    std::vector<std::uint16_t> c_i = uniform_symbols(ctx.f.f3.size(), qv, blk);
    tr.ledger.shared_fresh += c_i.size();

    auto enc = strong_encode(ctx, x, tr.cbar, c_i, blk);
    tr.ledger.transmitted_trace += enc.trace.size();

    auto dec = strong_decode(ctx, enc.message, tr.cbar, c_i, enc.trace, local);
    tr.ledger.local_uniform += ctx.local_uniform_set.size();
    tr.ledger.local_conditional +=
        dec.local_trace.size() - ctx.local_uniform_set.size();

    BlockRecord rec{x,
                    std::move(enc.u),
                    std::move(dec.v),
                    std::move(dec.y),
                    std::move(c_i),
                    std::move(enc.message),
                    std::move(enc.trace),
                    std::move(dec.local_trace)};
    tr.blocks.push_back(std::move(rec));
  }
  return tr;
}

const RateRow& RateReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw ValidationError("no rate row named " + name);
}

namespace {

double log2_of(std::size_t q) { return std::log2(static_cast<double>(q)); }

}  // namespace

RateReport rate_report(const ResolvabilityContext& ctx, int k) {
  if (k < 1) throw ValidationError("need k >= 1 blocks");
  const double N = static_cast<double>(ctx.profile.size());
  const double logq = log2_of(ctx.joint.dim(0));
  const std::size_t a0[] = {0}, a1[] = {1};
  const double mi = prob::mutual_information(ctx.joint, a0, a1);
  const double h_x = prob::entropy(ctx.joint.marginal_pmf(0));
  const double h_x_given_y = h_x - mi;

  const double recycled = static_cast<double>(ctx.very_high_given_out.size());
  const double fresh = static_cast<double>(ctx.fresh_set.size());

  RateReport report;
  {
    const double frac = (recycled + k * fresh) / (k * N);
    report.rows.push_back({"randomness", frac, frac * logq,
                           mi + h_x_given_y / static_cast<double>(k)});
  }
  {
    const double frac = fresh / N;
    report.rows.push_back({"randomness_k_inf", frac, frac * logq, mi});
  }
  {
    const auto open = polarize::set_complement(
        ctx.very_high, ctx.profile.size());
    const double bits = entropy_sum(ctx.profile.h_uncond, open) / N;
    report.rows.push_back(
        {"sampling_trace", static_cast<double>(open.size()) / N, bits, 0.0});
  }
  return report;
}

RateReport rate_report(const EmpiricalContext& ctx, int k) {
  if (k < 1) throw ValidationError("need k >= 1 blocks");
  const double N = static_cast<double>(ctx.profile.size());
  const double logq = log2_of(ctx.joint.dim(1));
  const std::size_t a0[] = {0}, a1[] = {1};
  const double mi = prob::mutual_information(ctx.joint, a0, a1);
  const double h_y = prob::entropy(ctx.joint.marginal_pmf(1));
  const double h_y_given_x = h_y - mi;

  RateReport report;
  {
    const double frac = static_cast<double>(ctx.message_set.size()) / N;
    report.rows.push_back({"message", frac, frac * logq, mi});
  }
  {
    const double frac =
        static_cast<double>(ctx.very_high_given_side.size()) / (k * N);
    report.rows.push_back({"common_randomness", frac, frac * logq,
                           h_y_given_x / static_cast<double>(k)});
  }
  {
    const double bits = entropy_sum(ctx.profile.h_uncond, ctx.trace_set) / N;
    report.rows.push_back({"sampling_trace",
                           static_cast<double>(ctx.trace_set.size()) / N, bits,
                           0.0});
  }
  return report;
}

RateReport rate_report(const StrongContext& ctx, int k) {
  if (k < 1) throw ValidationError("need k >= 1 blocks");
  const double N = static_cast<double>(ctx.profile_middle.size());
  const double logqv = log2_of(ctx.joint.dim(1));
  const double logqy = log2_of(ctx.joint.dim(2));
  const std::size_t ax[] = {0}, av[] = {1}, ay[] = {2}, axy[] = {0, 2};
  const double i_vx = prob::mutual_information(ctx.joint, av, ax);
  const double i_vxy = prob::mutual_information(ctx.joint, av, axy);
  const double i_vy_given_x = i_vxy - i_vx;
  const double h_v = prob::entropy(ctx.joint.marginal_pmf(1));
  const double h_v_given_xy = h_v - i_vxy;
  const std::size_t vy_axes[] = {1, 2};
  const prob::JointPmf m_vy = ctx.joint.marginal(vy_axes);
  const double h_y_given_v =
      prob::entropy(m_vy) - prob::entropy(m_vy.marginal_pmf(0));
  (void)ay;

  RateReport report;
  {
    const double frac = static_cast<double>(ctx.f.f4.size()) / N;
    report.rows.push_back({"communication", frac, frac * logqv, i_vx});
  }
  {
    const double frac = (static_cast<double>(ctx.f.f2.size()) +
                         k * static_cast<double>(ctx.f.f3.size())) /
                        (k * N);
    report.rows.push_back(
        {"common_randomness", frac, frac * logqv,
         i_vy_given_x + h_v_given_xy / static_cast<double>(k)});
  }
  {
    const double frac = static_cast<double>(ctx.local_uniform_set.size()) / N;
    report.rows.push_back({"local_randomness", frac, frac * logqy,
                           h_y_given_v});
  }
  {
    const double bits =
        entropy_sum(ctx.profile_middle.h_uncond, ctx.f.f1) / N;
    report.rows.push_back({"sampling_trace",
                           static_cast<double>(ctx.f.f1.size()) / N, bits,
                           0.0});
  }
  {
    // communication + common randomness at k -> infinity
    const double frac = (static_cast<double>(ctx.f.f4.size()) +
                         static_cast<double>(ctx.f.f3.size())) /
                        N;
    report.rows.push_back({"sum_k_inf", frac, frac * logqv, i_vxy});
  }
  return report;
}

namespace {

using nlohmann::json;

json symbols_json(const field::SymbolVector& v) {
  json arr = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

std::string Transcript::to_json() const {
  json j;
  j["format"] = "polarcov-transcript";
  j["version"] = 1;
  j["scheme"] = scheme_name(kind);
  j["n"] = n;
  j["k"] = k;
  j["seed"] = seed;
  j["cbar"] = cbar;
  j["ledger"] = {{"shared_recycled", ledger.shared_recycled},
                 {"shared_fresh", ledger.shared_fresh},
                 {"transmitted_trace", ledger.transmitted_trace},
                 {"local_uniform", ledger.local_uniform},
                 {"local_conditional", ledger.local_conditional}};
  json blocks_json = json::array();
  for (const auto& b : blocks) {
    json bj;
    bj["x"] = symbols_json(b.x);
    bj["u"] = symbols_json(b.u);
    if (b.v) bj["v"] = symbols_json(*b.v);
    if (b.y) bj["y"] = symbols_json(*b.y);
    bj["fresh"] = b.fresh;
    bj["message"] = b.message;
    bj["trace"] = b.trace;
    bj["local_trace"] = b.local_trace;
    blocks_json.push_back(std::move(bj));
  }
  j["blocks"] = std::move(blocks_json);
  return j.dump(2);
}

}  // namespace polarcov::schemes
