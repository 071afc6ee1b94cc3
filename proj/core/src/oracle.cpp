#include "polarcov/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace polarcov::oracle {

EnumeratedLaw::EnumeratedLaw(std::vector<VarDesc> vars, std::size_t budget)
    : vars_(std::move(vars)) {
  if (vars_.empty()) throw ValidationError("law needs at least one variable");
  std::size_t total = 1;
  for (const auto& v : vars_) {
    if (v.size == 0) throw ValidationError("zero-sized variable");
    if (total > budget / v.size) {
      throw BudgetError("enumerated outcome table exceeds the budget");
    }
    total *= v.size;
  }
  w_.assign(total, 0.0);
}

std::size_t EnumeratedLaw::var_id(const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return i;
  }
  throw DimensionError("no variable named " + name);
}

void EnumeratedLaw::add(std::span<const std::size_t> values, double weight) {
  if (values.size() != vars_.size()) {
    throw DimensionError("outcome arity mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (values[i] >= vars_[i].size) throw DimensionError("outcome out of range");
    flat = flat * vars_[i].size + values[i];
  }
  w_[flat] += weight;
}

double EnumeratedLaw::total() const {
  double t = 0.0;
  for (double v : w_) t += v;
  return t;
}

void EnumeratedLaw::normalize() {
  const double t = total();
  if (!(t > 0.0)) throw ValidationError("law has zero total mass");
  for (double& v : w_) v /= t;
}

void EnumeratedLaw::validate() const {
  if (std::abs(total() - 1.0) > prob::kSumTolerance) {
    throw ValidationError("law weights do not sum to 1");
  }
}

prob::JointPmf EnumeratedLaw::marginal(
    std::span<const std::string> names) const {
  std::vector<std::size_t> ids;
  ids.reserve(names.size());
  for (const auto& name : names) ids.push_back(var_id(name));

  std::vector<std::size_t> out_dims;
  for (std::size_t id : ids) out_dims.push_back(vars_[id].size);
  std::size_t out_size = 1;
  for (std::size_t d : out_dims) out_size *= d;

  std::vector<double> out(out_size, 0.0);
  std::vector<std::size_t> idx(vars_.size(), 0);
  for (std::size_t flat = 0; flat < w_.size(); ++flat) {
    if (w_[flat] != 0.0) {
      std::size_t rem = flat;
      for (std::size_t i = vars_.size(); i-- > 0;) {
        idx[i] = rem % vars_[i].size;
        rem /= vars_[i].size;
      }
      std::size_t of = 0;
      for (std::size_t id : ids) of = of * vars_[id].size + idx[id];
      out[of] += w_[flat];
    }
  }
  // guard the constructor's sum gate against accumulated rounding
  double sum = 0.0;
  for (double v : out) sum += v;
  if (sum > 0.0) {
    for (double& v : out) v /= sum;
  }
  return prob::JointPmf(std::move(out_dims), std::move(out));
}

double EnumeratedLaw::mutual_information(
    std::span<const std::string> group_a,
    std::span<const std::string> group_b) const {
  std::vector<std::string> all(group_a.begin(), group_a.end());
  all.insert(all.end(), group_b.begin(), group_b.end());
  const prob::JointPmf m = marginal(all);
  std::vector<std::size_t> a(group_a.size()), b(group_b.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = i;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = a.size() + i;
  return prob::mutual_information(m, a, b);
}

prob::JointPmf iid_block(const prob::Pmf& p, int copies) {
  const std::size_t q = p.size();
  std::size_t total = 1;
  for (int i = 0; i < copies; ++i) total *= q;
  std::vector<double> out(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (int i = 0; i < copies; ++i) {
      w *= p[rem % q];
      rem /= q;
    }
    out[flat] = w;
  }
  return prob::JointPmf({total}, std::move(out));
}

prob::JointPmf iid_pair_block(const prob::JointPmf& joint_xy, int copies) {
  if (joint_xy.rank() != 2) throw DimensionError("expected a two-axis joint");
  const std::size_t qx = joint_xy.dim(0), qy = joint_xy.dim(1);
  std::size_t tx = 1, ty = 1;
  for (int i = 0; i < copies; ++i) {
    tx *= qx;
    ty *= qy;
  }
  std::vector<double> out(tx * ty, 0.0);
  for (std::size_t xf = 0; xf < tx; ++xf) {
    std::size_t xr = xf;
    std::vector<std::size_t> xd(static_cast<std::size_t>(copies));
    for (int i = copies; i-- > 0;) {
      xd[static_cast<std::size_t>(i)] = xr % qx;
      xr /= qx;
    }
    for (std::size_t yf = 0; yf < ty; ++yf) {
      std::size_t yr = yf;
      double w = 1.0;
      for (int i = copies; i-- > 0;) {
        const std::size_t xy[] = {xd[static_cast<std::size_t>(i)], yr % qy};
        w *= joint_xy.at(xy);
        yr /= qy;
      }
      out[xf * ty + yf] = w;
    }
  }
  return prob::JointPmf({tx, ty}, std::move(out));
}

namespace {

// Prefix marginals of the transformed word for an iid source with given
// per-position weight vectors. m[j][prefix_flat] = sum of word weights whose
// transform starts with the prefix; conditionals are ratios.
struct PrefixTables {
  std::size_t q = 0;
  std::size_t N = 0;
  std::vector<std::vector<double>> m;  // m[j], j = 0..N

  double conditional(std::size_t j, std::size_t prefix_flat,
                     std::size_t a) const {
    const double parent = m[j][prefix_flat];
    if (!(parent > 0.0)) return 0.0;
    return m[j + 1][prefix_flat * q + a] / parent;
  }
};

PrefixTables build_prefix_tables(
    const std::vector<std::vector<double>>& weights, std::size_t q,
    std::size_t budget) {
  const std::size_t N = weights.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < N; ++i) {
    if (total > budget / q) throw BudgetError("prefix table exceeds budget");
    total *= q;
  }
  std::vector<double> full(total, 0.0);
  std::vector<std::uint16_t> x(N);
  for (std::size_t xf = 0; xf < total; ++xf) {
    std::size_t rem = xf;
    double w = 1.0;
    for (std::size_t i = N; i-- > 0;) {
      x[i] = static_cast<std::uint16_t>(rem % q);
      rem /= q;
      w *= weights[i][x[i]];
    }
    if (w == 0.0) continue;
    std::vector<std::uint16_t> u = x;
    field::polar_transform_inplace(u, static_cast<std::uint16_t>(q));
    std::size_t uf = 0;
    for (std::size_t i = 0; i < N; ++i) uf = uf * q + u[i];
    full[uf] += w;
  }

  PrefixTables t;
  t.q = q;
  t.N = N;
  t.m.resize(N + 1);
  t.m[N] = std::move(full);
  for (std::size_t j = N; j-- > 0;) {
    std::vector<double> parent(t.m[j + 1].size() / q, 0.0);
    for (std::size_t p = 0; p < parent.size(); ++p) {
      for (std::size_t a = 0; a < q; ++a) {
        parent[p] += t.m[j + 1][p * q + a];
      }
    }
    t.m[j] = std::move(parent);
  }
  return t;
}

std::size_t pow_size(std::size_t base, int exp) {
  std::size_t v = 1;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

std::size_t flat_of(std::span<const std::uint16_t> digits, std::size_t base) {
  std::size_t f = 0;
  for (std::uint16_t d : digits) f = f * base + d;
  return f;
}

std::vector<std::uint16_t> digits_of(std::size_t flat, std::size_t base,
                                     std::size_t len) {
  std::vector<std::uint16_t> d(len);
  for (std::size_t i = len; i-- > 0;) {
    d[i] = static_cast<std::uint16_t>(flat % base);
    flat /= base;
  }
  return d;
}

}  // namespace

EnumeratedLaw enumerate_plan_law(const prob::JointPmf& joint,
                                 std::size_t polarized_axis,
                                 std::optional<std::size_t> side_axis,
                                 const sc::FrozenPlan& plan, int n,
                                 const PlanLawOptions& options,
                                 std::size_t budget) {
  const std::size_t N = std::size_t{1} << n;
  if (plan.size() != N) throw DimensionError("plan length must be 2^n");
  const std::size_t q = joint.dim(polarized_axis);
  plan.validate(static_cast<std::uint16_t>(q));

  const std::size_t block_size = pow_size(q, static_cast<int>(N));

  std::vector<VarDesc> vars;
  std::size_t side_size = 0, side_count = 0;
  if (side_axis.has_value()) {
    side_size = joint.dim(*side_axis);
    side_count = pow_size(side_size, static_cast<int>(N));
    vars.push_back({"side", side_count});
  }
  vars.push_back({"block", block_size});
  EnumeratedLaw law(std::move(vars), budget);

  // Unconditioned tables: weights are the polarized marginal, identical at
  // every position.
  const prob::Pmf pol_marginal = joint.marginal_pmf(polarized_axis);
  std::vector<std::vector<double>> w_uncond(
      N, std::vector<double>(pol_marginal.values().begin(),
                             pol_marginal.values().end()));
  const PrefixTables uncond = build_prefix_tables(w_uncond, q, budget);

  std::optional<prob::JointPmf> side_pol;  // [side][pol] joint weights
  std::optional<prob::Pmf> side_marginal;
  if (side_axis.has_value()) {
    const std::size_t axes[] = {*side_axis, polarized_axis};
    side_pol = joint.marginal(axes);
    side_marginal = joint.marginal_pmf(*side_axis);
  }

  std::vector<bool> averaged(N, false);
  for (std::uint32_t j : options.average_frozen) {
    if (j >= N) throw DimensionError("averaged index out of range");
    if (plan.rules[j] != sc::Rule::Frozen) {
      throw ValidationError("averaged index is not frozen in the plan");
    }
    averaged[j] = true;
  }

  std::vector<std::uint16_t> u(N, 0);

  // DFS over the transformed word, one side sequence at a time.
  const std::size_t side_outer = side_axis.has_value() ? side_count : 1;
  for (std::size_t sf = 0; sf < side_outer; ++sf) {
    double side_weight = 1.0;
    std::optional<PrefixTables> cond;
    if (side_axis.has_value()) {
      const auto sd = digits_of(sf, side_size, N);
      std::vector<std::vector<double>> w_cond(N, std::vector<double>(q, 0.0));
      for (std::size_t i = 0; i < N; ++i) {
        side_weight *= (*side_marginal)[sd[i]];
        for (std::size_t a = 0; a < q; ++a) {
          // unnormalized joint weight; ratios normalize it away
          w_cond[i][a] = side_pol->at_flat(sd[i] * q + a);
        }
      }
      if (side_weight == 0.0) continue;
      cond = build_prefix_tables(w_cond, q, budget);
    }

    auto emit = [&](double weight) {
      std::size_t block_flat;
      if (options.emit_inverse) {
        std::vector<std::uint16_t> x = u;
        field::polar_inverse_inplace(x, static_cast<std::uint16_t>(q));
        block_flat = flat_of(x, q);
      } else {
        block_flat = flat_of(u, q);
      }
      if (side_axis.has_value()) {
        const std::size_t vals[] = {sf, block_flat};
        law.add(vals, weight);
      } else {
        const std::size_t vals[] = {block_flat};
        law.add(vals, weight);
      }
    };

    auto dfs = [&](auto&& self, std::size_t j, std::size_t prefix_flat,
                   double weight) -> void {
      if (weight == 0.0) return;
      if (j == N) {
        emit(weight);
        return;
      }
      const auto step = [&](std::uint16_t a, double p) {
        if (p == 0.0) return;
        u[j] = a;
        self(self, j + 1, prefix_flat * q + a, weight * p);
      };
      switch (plan.rules[j]) {
        case sc::Rule::Frozen:
          if (averaged[j]) {
            for (std::size_t a = 0; a < q; ++a) {
              step(static_cast<std::uint16_t>(a), 1.0 / static_cast<double>(q));
            }
          } else {
            step(plan.frozen[j], 1.0);
          }
          break;
        case sc::Rule::SampleTrue: {
          if (!cond.has_value()) {
            throw ValidationError("plan draws with side but no side axis set");
          }
          for (std::size_t a = 0; a < q; ++a) {
            step(static_cast<std::uint16_t>(a),
                 cond->conditional(j, prefix_flat, a));
          }
          break;
        }
        case sc::Rule::SampleNoSide:
          for (std::size_t a = 0; a < q; ++a) {
            step(static_cast<std::uint16_t>(a),
                 uncond.conditional(j, prefix_flat, a));
          }
          break;
        case sc::Rule::SampleUniform:
          for (std::size_t a = 0; a < q; ++a) {
            step(static_cast<std::uint16_t>(a), 1.0 / static_cast<double>(q));
          }
          break;
        case sc::Rule::ArgmaxNoSide: {
          double best = -1.0;
          std::uint16_t arg = 0;
          for (std::size_t a = 0; a < q; ++a) {
            const double p = uncond.conditional(j, prefix_flat, a);
            if (p > best) {
              best = p;
              arg = static_cast<std::uint16_t>(a);
            }
          }
          step(arg, 1.0);
          break;
        }
      }
    };
    dfs(dfs, 0, 0, side_weight);
  }

  law.normalize();
  return law;
}

namespace {

// Extends a law whose last variable is a block of channel inputs with the
// product-channel output block.
EnumeratedLaw extend_with_channel(const EnumeratedLaw& law,
                                  const std::string& in_var,
                                  const schemes::Dmc& ch, std::size_t n_pos,
                                  const std::string& out_name,
                                  std::size_t budget) {
  std::vector<VarDesc> vars = law.vars();
  const std::size_t out_block = pow_size(ch.out_size, static_cast<int>(n_pos));
  vars.push_back({out_name, out_block});
  EnumeratedLaw out(vars, budget);

  std::vector<std::string> names;
  for (const auto& v : law.vars()) names.push_back(v.name);
  const prob::JointPmf src = law.marginal(names);
  const std::size_t in_id = law.var_id(in_var);

  std::vector<std::size_t> idx(names.size(), 0);
  for (std::size_t flat = 0; flat < src.flat_size(); ++flat) {
    const double w = src.at_flat(flat);
    if (w == 0.0) continue;
    std::size_t rem = flat;
    for (std::size_t i = names.size(); i-- > 0;) {
      idx[i] = rem % src.dim(i);
      rem /= src.dim(i);
    }
    const auto x_digits = digits_of(idx[in_id], ch.in_size, n_pos);
    // enumerate output blocks with product weights
    std::vector<std::size_t> vals(idx.begin(), idx.end());
    vals.push_back(0);
    auto rec = [&](auto&& self, std::size_t pos, std::size_t yflat,
                   double wy) -> void {
      if (wy == 0.0) return;
      if (pos == n_pos) {
        vals.back() = yflat;
        out.add(vals, w * wy);
        return;
      }
      const auto row = ch.row(x_digits[pos]);
      for (std::size_t y = 0; y < ch.out_size; ++y) {
        self(self, pos + 1, yflat * ch.out_size + y, wy * row[y]);
      }
    };
    rec(rec, 0, 0, 1.0);
  }
  out.normalize();
  return out;
}

}  // namespace

EnumeratedLaw enumerate_induced(const schemes::ResolvabilityContext& ctx,
                                std::size_t budget) {
  const std::size_t N = ctx.profile.size();
  sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  polarize::IndexSet frozen_all = ctx.very_high;
  std::vector<std::uint16_t> zeros(frozen_all.size(), 0);
  plan.freeze(frozen_all, zeros);

  PlanLawOptions options;
  options.emit_inverse = true;
  options.average_frozen = frozen_all;
  EnumeratedLaw x_law = enumerate_plan_law(ctx.joint, 0, std::nullopt, plan,
                                           ctx.n, options, budget);
  // rename "block" -> x and append the channel output
  std::vector<VarDesc> vars{{"x", x_law.vars()[0].size}};
  EnumeratedLaw renamed(vars, budget);
  const std::string block_names[] = {"block"};
  const prob::JointPmf m = x_law.marginal(block_names);
  for (std::size_t i = 0; i < m.flat_size(); ++i) {
    const std::size_t vals[] = {i};
    renamed.add(vals, m.at_flat(i));
  }
  return extend_with_channel(renamed, "x", ctx.channel, N, "y", budget);
}

EnumeratedLaw enumerate_induced(const schemes::EmpiricalContext& ctx,
                                std::size_t budget) {
  const std::size_t N = ctx.profile.size();
  sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  plan.assign(ctx.message_set, sc::Rule::SampleTrue);
  std::vector<std::uint16_t> zeros(ctx.very_high_given_side.size(), 0);
  plan.freeze(ctx.very_high_given_side, zeros);

  PlanLawOptions options;
  options.emit_inverse = true;
  options.average_frozen = ctx.very_high_given_side;
  EnumeratedLaw law = enumerate_plan_law(ctx.joint, 1, 0, plan, ctx.n,
                                         options, budget);
  // variables arrive as ("side", "block"); rename to ("x", "y")
  std::vector<VarDesc> vars{{"x", law.vars()[0].size},
                            {"y", law.vars()[1].size}};
  EnumeratedLaw out(vars, budget);
  const std::string names[] = {"side", "block"};
  const prob::JointPmf m = law.marginal(names);
  for (std::size_t i = 0; i < m.flat_size(); ++i) {
    if (m.at_flat(i) == 0.0) continue;
    const std::size_t vals[] = {i / vars[1].size, i % vars[1].size};
    out.add(vals, m.at_flat(i));
  }
  return out;
}

namespace {

// Law of the simulated output block given one realized middle block:
// uniform draws on the designated set, exact prefix conditionals elsewhere.
std::vector<std::pair<std::size_t, double>> simulate_output_block(
    const schemes::StrongContext& ctx, std::size_t v_flat,
    std::size_t budget) {
  const std::size_t N = ctx.profile_middle.size();
  const std::size_t qv = ctx.joint.dim(1);
  const std::size_t qy = ctx.joint.dim(2);
  const std::size_t vy_axes[] = {1, 2};
  const prob::JointPmf m_vy = ctx.joint.marginal(vy_axes);
  std::vector<bool> uniform_pos(N, false);
  for (std::uint32_t j : ctx.local_uniform_set) uniform_pos[j] = true;

  const auto v_digits = digits_of(v_flat, qv, N);
  std::vector<std::vector<double>> w_cond(N, std::vector<double>(qy, 0.0));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t y = 0; y < qy; ++y) {
      w_cond[i][y] = m_vy.at_flat(v_digits[i] * qy + y);
    }
  }
  const PrefixTables tables = build_prefix_tables(w_cond, qy, budget);
  std::vector<std::pair<std::size_t, double>> outcomes;
  std::vector<std::uint16_t> t(N, 0);
  auto rec = [&](auto&& self, std::size_t j, std::size_t prefix_flat,
                 double w) -> void {
    if (w == 0.0) return;
    if (j == N) {
      std::vector<std::uint16_t> y = t;
      field::polar_inverse_inplace(y, static_cast<std::uint16_t>(qy));
      outcomes.emplace_back(flat_of(y, qy), w);
      return;
    }
    for (std::size_t a = 0; a < qy; ++a) {
      const double p = uniform_pos[j] ? 1.0 / static_cast<double>(qy)
                                      : tables.conditional(j, prefix_flat, a);
      if (p == 0.0) continue;
      t[j] = static_cast<std::uint16_t>(a);
      self(self, j + 1, prefix_flat * qy + a, w * p);
    }
  };
  rec(rec, 0, 0, 1.0);
  return outcomes;
}

}  // namespace

EnumeratedLaw enumerate_induced(const schemes::StrongContext& ctx,
                                std::size_t budget) {
  const std::size_t N = ctx.profile_middle.size();
  const std::size_t qy = ctx.joint.dim(2);

  sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  plan.assign(ctx.f.f4, sc::Rule::SampleTrue);
  polarize::IndexSet frozen;
  frozen.insert(frozen.end(), ctx.f.f2.begin(), ctx.f.f2.end());
  frozen.insert(frozen.end(), ctx.f.f3.begin(), ctx.f.f3.end());
  std::sort(frozen.begin(), frozen.end());
  std::vector<std::uint16_t> zeros(frozen.size(), 0);
  plan.freeze(frozen, zeros);

  PlanLawOptions options;
  options.emit_inverse = true;
  options.average_frozen = frozen;
  const EnumeratedLaw xv_law = enumerate_plan_law(ctx.joint, 1, 0, plan,
                                                  ctx.n, options, budget);
  const std::string names[] = {"side", "block"};
  const prob::JointPmf m_xv = xv_law.marginal(names);
  const std::size_t x_count = xv_law.vars()[0].size;
  const std::size_t v_count = xv_law.vars()[1].size;

  std::vector<VarDesc> vars{{"x", x_count},
                            {"v", v_count},
                            {"y", pow_size(qy, static_cast<int>(N))}};
  EnumeratedLaw out(vars, budget);

  // Channel simulation stage: per distinct middle block, the law of the
  // simulated outputs.
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> sim_cache;
  auto simulate = [&](std::size_t v_flat)
      -> const std::vector<std::pair<std::size_t, double>>& {
    auto it = sim_cache.find(v_flat);
    if (it != sim_cache.end()) return it->second;
    return sim_cache.emplace(v_flat, simulate_output_block(ctx, v_flat, budget))
        .first->second;
  };

  for (std::size_t flat = 0; flat < m_xv.flat_size(); ++flat) {
    const double w = m_xv.at_flat(flat);
    if (w == 0.0) continue;
    const std::size_t xf = flat / v_count;
    const std::size_t vf = flat % v_count;
    for (const auto& [yf, wy] : simulate(vf)) {
      const std::size_t vals[] = {xf, vf, yf};
      out.add(vals, w * wy);
    }
  }
  out.normalize();
  return out;
}

EnumeratedLaw enumerate_chain(const schemes::ResolvabilityContext& ctx, int k,
                              bool recycle, std::size_t budget) {
  if (k < 1) throw ValidationError("need k >= 1 blocks");
  const std::size_t N = ctx.profile.size();
  const std::size_t qx = ctx.joint.dim(0);
  const std::size_t qy = ctx.channel.out_size;
  const std::size_t cbar_count =
      pow_size(qx, static_cast<int>(ctx.very_high_given_out.size()));
  const std::size_t y_block = pow_size(qy, static_cast<int>(N));

  std::vector<VarDesc> vars{{"cbar", cbar_count}};
  for (int i = 1; i <= k; ++i) {
    vars.push_back({"y" + std::to_string(i), y_block});
  }
  EnumeratedLaw law(vars, budget);

  // Per recycled value: the block output law (fresh randomness and draws
  // integrated). Blocks are conditionally independent given the recycled
  // content.
  std::vector<std::vector<double>> y_given_cbar(cbar_count);
  std::vector<double> y_marginal(y_block, 0.0);
  for (std::size_t cf = 0; cf < cbar_count; ++cf) {
    sc::FrozenPlan plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
    const auto cbar_digits = digits_of(cf, qx, ctx.very_high_given_out.size());
    plan.freeze(ctx.very_high_given_out, cbar_digits);
    std::vector<std::uint16_t> zeros(ctx.fresh_set.size(), 0);
    plan.freeze(ctx.fresh_set, zeros);

    PlanLawOptions options;
    options.emit_inverse = true;
    options.average_frozen = ctx.fresh_set;
    EnumeratedLaw x_law = enumerate_plan_law(ctx.joint, 0, std::nullopt, plan,
                                             ctx.n, options, budget);
    std::vector<VarDesc> xv{{"x", x_law.vars()[0].size}};
    EnumeratedLaw renamed(xv, budget);
    const std::string bn[] = {"block"};
    const prob::JointPmf mx = x_law.marginal(bn);
    for (std::size_t i = 0; i < mx.flat_size(); ++i) {
      const std::size_t vals[] = {i};
      renamed.add(vals, mx.at_flat(i));
    }
    EnumeratedLaw xy =
        extend_with_channel(renamed, "x", ctx.channel, N, "y", budget);
    const std::string yn[] = {"y"};
    const prob::JointPmf my = xy.marginal(yn);
    y_given_cbar[cf].assign(my.values().begin(), my.values().end());
    for (std::size_t i = 0; i < y_block; ++i) {
      y_marginal[i] += y_given_cbar[cf][i] / static_cast<double>(cbar_count);
    }
  }

  const double cbar_w = 1.0 / static_cast<double>(cbar_count);
  std::vector<std::size_t> vals(static_cast<std::size_t>(k) + 1, 0);
  auto rec = [&](auto&& self, int block, std::size_t cf, double w) -> void {
    if (w == 0.0) return;
    if (block > k) {
      law.add(vals, w);
      return;
    }
    const std::vector<double>& dist =
        recycle || block == 1 ? y_given_cbar[cf] : y_marginal;
    for (std::size_t yf = 0; yf < y_block; ++yf) {
      if (dist[yf] == 0.0) continue;
      vals[static_cast<std::size_t>(block)] = yf;
      self(self, block + 1, cf, w * dist[yf]);
    }
  };
  for (std::size_t cf = 0; cf < cbar_count; ++cf) {
    vals[0] = cf;
    rec(rec, 1, cf, cbar_w);
  }
  law.normalize();
  return law;
}

std::vector<double> prefix_entropies(const EnumeratedLaw& law,
                                     const std::string& var, std::size_t q,
                                     std::size_t block_len) {
  const std::string names[] = {var};
  const prob::JointPmf m = law.marginal(names);
  if (m.flat_size() != pow_size(q, static_cast<int>(block_len))) {
    throw DimensionError("variable is not a q^N block");
  }
  std::vector<double> h(block_len, 0.0);
  std::vector<double> cur(m.values().begin(), m.values().end());
  for (std::size_t j = block_len; j-- > 0;) {
    std::vector<double> parent(cur.size() / q, 0.0);
    for (std::size_t p = 0; p < parent.size(); ++p) {
      for (std::size_t a = 0; a < q; ++a) parent[p] += cur[p * q + a];
    }
    double hj = 0.0;
    for (std::size_t p = 0; p < parent.size(); ++p) {
      for (std::size_t a = 0; a < q; ++a) {
        const double v = cur[p * q + a];
        if (v > 0.0) hj += v * std::log2(parent[p] / v);
      }
    }
    h[j] = std::max(hj, 0.0);
    cur = std::move(parent);
  }
  return h;
}

OracleMetrics exact_metrics(const EnumeratedLaw& law,
                            std::span<const std::string> names,
                            const prob::JointPmf& target) {
  const prob::JointPmf induced = law.marginal(names);
  if (induced.dims() != target.dims()) {
    throw DimensionError("target shape does not match the marginal");
  }
  OracleMetrics m;
  m.kl_target_vs_induced = prob::kl_divergence(target, induced);
  m.kl_induced_vs_target = prob::kl_divergence(induced, target);
  m.v_dist = prob::variational_distance(induced, target);
  return m;
}

namespace {

double deficit_sum(const std::vector<double>& h, double logq,
                   const polarize::IndexSet& at) {
  double s = 0.0;
  for (std::uint32_t j : at) s += logq - h[j];
  return s;
}

double gap_sum(const std::vector<double>& hi, const std::vector<double>& lo,
               const polarize::IndexSet& at) {
  double s = 0.0;
  for (std::uint32_t j : at) s += hi[j] - lo[j];
  return s;
}

IdentityAudit finish_audit(double enumerated, double profile_sum) {
  return {enumerated, profile_sum,
          std::abs(enumerated - profile_sum) <= 1e-9};
}

}  // namespace

IdentityAudit divergence_identity_audit(
    const schemes::ResolvabilityContext& ctx, std::size_t budget) {
  const int N = static_cast<int>(ctx.profile.size());
  const auto law = enumerate_induced(ctx, budget);
  const std::string xn[] = {"x"};
  const auto m =
      exact_metrics(law, xn, iid_block(ctx.joint.marginal_pmf(0), N));
  const double logq = std::log2(static_cast<double>(ctx.joint.dim(0)));
  return finish_audit(m.kl_target_vs_induced,
                      deficit_sum(ctx.profile.h_uncond, logq, ctx.very_high));
}

IdentityAudit divergence_identity_audit(const schemes::EmpiricalContext& ctx,
                                        std::size_t budget) {
  const int N = static_cast<int>(ctx.profile.size());
  const auto law = enumerate_induced(ctx, budget);
  const std::string names[] = {"x", "y"};
  const auto m = exact_metrics(law, names, iid_pair_block(ctx.joint, N));
  const double logq = std::log2(static_cast<double>(ctx.joint.dim(1)));
  const double expect =
      deficit_sum(ctx.profile.h_cond[0], logq, ctx.very_high_given_side) +
      gap_sum(ctx.profile.h_uncond, ctx.profile.h_cond[0], ctx.trace_set);
  return finish_audit(m.kl_target_vs_induced, expect);
}

IdentityAudit divergence_identity_audit(const schemes::StrongContext& ctx,
                                        std::size_t budget) {
  const int N = static_cast<int>(ctx.profile_middle.size());
  const auto law = enumerate_induced(ctx, budget);
  const std::size_t xv_axes[] = {0, 1};
  const std::string names[] = {"x", "v"};
  const auto m = exact_metrics(
      law, names, iid_pair_block(ctx.joint.marginal(xv_axes), N));
  const double logq = std::log2(static_cast<double>(ctx.joint.dim(1)));
  polarize::IndexSet frozen;
  frozen.insert(frozen.end(), ctx.f.f2.begin(), ctx.f.f2.end());
  frozen.insert(frozen.end(), ctx.f.f3.begin(), ctx.f.f3.end());
  std::sort(frozen.begin(), frozen.end());
  const double expect =
      deficit_sum(ctx.profile_middle.h_cond[0], logq, frozen) +
      gap_sum(ctx.profile_middle.h_uncond, ctx.profile_middle.h_cond[0],
              ctx.f.f1);
  return finish_audit(m.kl_target_vs_induced, expect);
}

EnumeratedLaw enumerate_strong_baseline(const schemes::StrongContext& ctx,
                                        std::size_t budget) {
  const std::size_t N = ctx.profile_middle.size();
  const std::size_t qx = ctx.joint.dim(0);
  const std::size_t qv = ctx.joint.dim(1);
  const std::size_t qy = ctx.joint.dim(2);
  const std::size_t x_count = pow_size(qx, static_cast<int>(N));
  const std::size_t v_count = pow_size(qv, static_cast<int>(N));

  std::vector<VarDesc> vars{{"x", x_count},
                            {"v", v_count},
                            {"y", pow_size(qy, static_cast<int>(N))}};
  EnumeratedLaw out(vars, budget);

  const prob::JointPmf x_target = iid_block(ctx.joint.marginal_pmf(0),
                                            static_cast<int>(N));
  const double v_weight = 1.0 / static_cast<double>(v_count);
  for (std::size_t vf = 0; vf < v_count; ++vf) {
    const auto outcomes = simulate_output_block(ctx, vf, budget);
    for (std::size_t xf = 0; xf < x_count; ++xf) {
      const double wx = x_target.at_flat(xf);
      if (wx == 0.0) continue;
      for (const auto& [yf, wy] : outcomes) {
        const std::size_t vals[] = {xf, vf, yf};
        out.add(vals, wx * v_weight * wy);
      }
    }
  }
  out.normalize();
  return out;
}

}  // namespace polarcov::oracle
