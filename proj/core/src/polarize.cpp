#include "polarcov/polarize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "polarcov/field.hpp"
#include "polarcov/scsample.hpp"

namespace polarcov::polarize {

void SourceSpec::validate() const {
  if (polarized_axis >= joint.rank()) {
    throw DimensionError("polarized axis out of range");
  }
  if (!field::is_prime(static_cast<std::uint32_t>(q()))) {
    throw ValidationError("polarized alphabet size " + std::to_string(q()) +
                          " must be prime");
  }
  for (const auto& group : side_groups) {
    std::vector<std::size_t> seen;
    for (std::size_t a : group) {
      if (a >= joint.rank()) throw DimensionError("side axis out of range");
      if (a == polarized_axis) {
        throw ValidationError("side group may not contain the polarized axis");
      }
      if (std::find(seen.begin(), seen.end(), a) != seen.end()) {
        throw ValidationError("duplicate axis in side group");
      }
      seen.push_back(a);
    }
  }
  if (markov_xvy) {
    if (joint.rank() != 3) {
      throw ValidationError("Markov factorization needs three axes (X, V, Y)");
    }
    const std::size_t qx = joint.dim(0), qv = joint.dim(1), qy = joint.dim(2);
    const std::size_t xv_axes[] = {0, 1};
    const std::size_t vy_axes[] = {1, 2};
    const std::size_t v_axes[] = {1};
    const prob::JointPmf m_xv = joint.marginal(xv_axes);
    const prob::JointPmf m_vy = joint.marginal(vy_axes);
    const prob::JointPmf m_v = joint.marginal(v_axes);
    for (std::size_t x = 0; x < qx; ++x) {
      for (std::size_t v = 0; v < qv; ++v) {
        for (std::size_t y = 0; y < qy; ++y) {
          const std::size_t xvy[] = {x, v, y};
          const std::size_t xv[] = {x, v};
          const std::size_t vy[] = {v, y};
          const std::size_t vv[] = {v};
          const double lhs = joint.at(xvy) * m_v.at(vv);
          const double rhs = m_xv.at(xv) * m_vy.at(vy);
          if (std::abs(lhs - rhs) > 1e-10) {
            throw ValidationError(
                "joint does not factor as a Markov chain through the middle "
                "axis");
          }
        }
      }
    }
  }
}

double PolarProfile::log2_alphabet() const {
  return std::log2(static_cast<double>(alphabet));
}

void PolarProfile::validate() const {
  const std::size_t N = static_cast<std::size_t>(1) << n;
  if (h_uncond.size() != N) throw ValidationError("profile length mismatch");
  const double logq = log2_alphabet();
  auto check_range = [&](const std::vector<double>& h) {
    if (h.size() != N) throw ValidationError("profile length mismatch");
    for (double v : h) {
      if (!(v >= -1e-9) || !(v <= logq + 1e-9)) {
        throw ValidationError("entropy outside [0, log2 q]");
      }
    }
  };
  check_range(h_uncond);
  for (const auto& h : h_cond) check_range(h);
  if (h_cond.size() != se_cond.size() || se_uncond.size() != N) {
    throw ValidationError("standard-error arrays mismatch");
  }
  // Conditioning can only reduce entropy; Monte Carlo noise gets slack.
  for (std::size_t g = 0; g < h_cond.size(); ++g) {
    for (std::size_t j = 0; j < N; ++j) {
      const double slack =
          method == Method::Exact
              ? 1e-9
              : 1e-9 + 4.0 * (se_uncond[j] + se_cond[g][j]);
      if (h_cond[g][j] > h_uncond[j] + slack) {
        throw ValidationError("conditioned entropy exceeds unconditioned");
      }
    }
  }
}

namespace {

// DP state: joint law of (symbol, context) as columns indexed by context.
struct DpState {
  std::size_t q = 0;
  std::vector<std::vector<double>> cols;
};

// Merge contexts with identical posteriors. Keys are posteriors on a 2^-44
// grid, so only near-identical columns coalesce.
void compact(DpState& s) {
  constexpr double kGrid = 0x1p44;
  std::map<std::vector<std::int64_t>, std::vector<double>> merged;
  for (auto& col : s.cols) {
    double w = 0.0;
    for (double v : col) w += v;
    if (!(w > 0.0)) continue;
    std::vector<std::int64_t> key(s.q);
    for (std::size_t x = 0; x < s.q; ++x) {
      key[x] = llround(col[x] / w * kGrid);
    }
    auto [it, inserted] = merged.try_emplace(std::move(key), col);
    if (!inserted) {
      for (std::size_t x = 0; x < s.q; ++x) it->second[x] += col[x];
    }
  }
  s.cols.clear();
  s.cols.reserve(merged.size());
  for (auto& [key, col] : merged) s.cols.push_back(std::move(col));
}

void check_budget(std::size_t cols, std::size_t q, std::size_t budget) {
  if (cols * q > budget) {
    throw BudgetError(
        "exact profile context table exceeds the enumeration budget (" +
        std::to_string(cols * q) + " > " + std::to_string(budget) +
        "); use mc_profile");
  }
}

// Pair combination. Minus: the new symbol is the sum of two independent
// copies, context is the context pair. Plus: the new symbol is the second
// copy, context additionally carries the revealed sum.
DpState minus_state(const DpState& s, std::size_t budget) {
  const std::size_t m = s.cols.size();
  const std::size_t q = s.q;
  check_budget(m * m, q, budget);
  DpState out{q, {}};
  out.cols.reserve(m * m);
  for (std::size_t c1 = 0; c1 < m; ++c1) {
    for (std::size_t c2 = 0; c2 < m; ++c2) {
      std::vector<double> col(q, 0.0);
      for (std::size_t x2 = 0; x2 < q; ++x2) {
        const double w = s.cols[c2][x2];
        if (w == 0.0) continue;
        std::size_t x1 = (q - x2) % q;
        for (std::size_t a = 0; a < q; ++a) {
          col[a] += s.cols[c1][x1] * w;
          ++x1;
          if (x1 == q) x1 = 0;
        }
      }
      out.cols.push_back(std::move(col));
    }
  }
  compact(out);
  check_budget(out.cols.size(), q, budget);
  return out;
}

DpState plus_state(const DpState& s, std::size_t budget) {
  const std::size_t m = s.cols.size();
  const std::size_t q = s.q;
  check_budget(m * m * q, q, budget);
  DpState out{q, {}};
  out.cols.reserve(m * m * q);
  for (std::size_t c1 = 0; c1 < m; ++c1) {
    for (std::size_t c2 = 0; c2 < m; ++c2) {
      for (std::size_t a = 0; a < q; ++a) {
        std::vector<double> col(q, 0.0);
        for (std::size_t x2 = 0; x2 < q; ++x2) {
          col[x2] = s.cols[c1][(a + q - x2) % q] * s.cols[c2][x2];
        }
        out.cols.push_back(std::move(col));
      }
    }
  }
  compact(out);
  check_budget(out.cols.size(), q, budget);
  return out;
}

double cond_entropy(const DpState& s) {
  double h = 0.0;
  for (const auto& col : s.cols) {
    double w = 0.0;
    for (double v : col) w += v;
    if (w > 0.0) h += w * prob::entropy_bits_unnormalized(col);
  }
  return h;
}

void profile_rec(const DpState& s, int level, std::size_t base,
                 std::vector<double>& out, std::size_t budget) {
  if (level == 0) {
    out[base] = cond_entropy(s);
    return;
  }
  {
    DpState m = minus_state(s, budget);
    profile_rec(m, level - 1, base, out, budget);
  }
  {
    DpState p = plus_state(s, budget);
    profile_rec(p, level - 1, base + (static_cast<std::size_t>(1) << (level - 1)),
                out, budget);
  }
}

DpState base_state(const SourceSpec& spec,
                   const std::vector<std::size_t>& side_axes) {
  const std::size_t q = spec.q();
  std::vector<std::size_t> axes = side_axes;
  axes.push_back(spec.polarized_axis);
  prob::JointPmf m = spec.joint.marginal(axes);
  const std::size_t side_size = m.flat_size() / q;
  DpState s{q, {}};
  s.cols.reserve(side_size);
  for (std::size_t c = 0; c < side_size; ++c) {
    std::vector<double> col(q);
    for (std::size_t x = 0; x < q; ++x) col[x] = m.at_flat(c * q + x);
    s.cols.push_back(std::move(col));
  }
  compact(s);
  return s;
}

}  // namespace

PolarProfile exact_profile(const SourceSpec& spec, int n, std::size_t budget) {
  spec.validate();
  if (n < 0 || n > 20) throw ValidationError("unsupported transform order n");
  const std::size_t N = static_cast<std::size_t>(1) << n;

  PolarProfile profile;
  profile.n = n;
  profile.alphabet = spec.q();
  profile.method = PolarProfile::Method::Exact;
  profile.h_uncond.assign(N, 0.0);
  profile.se_uncond.assign(N, 0.0);

  profile_rec(base_state(spec, {}), n, 0, profile.h_uncond, budget);
  for (const auto& group : spec.side_groups) {
    std::vector<double> h(N, 0.0);
    profile_rec(base_state(spec, group), n, 0, h, budget);
    profile.h_cond.push_back(std::move(h));
    profile.se_cond.emplace_back(N, 0.0);
  }
  profile.validate();
  return profile;
}

PolarProfile enumerated_profile(const SourceSpec& spec, int n) {
  spec.validate();
  if (n < 0 || n > 3) {
    throw BudgetError("enumerated profile is a cross-check for N <= 8");
  }
  const std::size_t N = static_cast<std::size_t>(1) << n;
  const std::size_t q = spec.q();

  PolarProfile profile;
  profile.n = n;
  profile.alphabet = q;
  profile.method = PolarProfile::Method::Exact;
  profile.se_uncond.assign(N, 0.0);

  auto profile_for = [&](const std::vector<std::size_t>& side_axes) {
    std::vector<std::size_t> axes = side_axes;
    axes.push_back(spec.polarized_axis);
    prob::JointPmf m = spec.joint.marginal(axes);
    const std::size_t s_size = m.flat_size() / q;

    std::size_t u_total = 1, s_total = 1;
    for (std::size_t i = 0; i < N; ++i) {
      u_total *= q;
      s_total *= s_size;
      if (u_total * s_total > (std::size_t{1} << 26)) {
        throw BudgetError("enumerated profile table too large");
      }
    }

    // Joint table over (transformed sequence, side sequence).
    std::vector<double> table(u_total * s_total, 0.0);
    std::vector<std::uint16_t> x(N), u(N);
    for (std::size_t xf = 0; xf < u_total; ++xf) {
      std::size_t rem = xf;
      for (std::size_t i = N; i-- > 0;) {
        x[i] = static_cast<std::uint16_t>(rem % q);
        rem /= q;
      }
      u = x;
      field::polar_transform_inplace(u, static_cast<std::uint16_t>(q));
      std::size_t uf = 0;
      for (std::size_t i = 0; i < N; ++i) uf = uf * q + u[i];
      for (std::size_t sf = 0; sf < s_total; ++sf) {
        std::size_t srem = sf;
        double w = 1.0;
        for (std::size_t i = N; i-- > 0;) {
          const std::size_t si = srem % s_size;
          srem /= s_size;
          w *= m.at_flat(si * q + x[i]);
          if (w == 0.0) break;
        }
        if (w != 0.0) table[uf * s_total + sf] += w;
      }
    }

    // Peel the last symbol repeatedly: h[j] from the (j+1)- and j-prefix
    // tables.
    std::vector<double> h(N, 0.0);
    std::vector<double> cur = std::move(table);
    std::size_t prefix_count = u_total;
    for (std::size_t j = N; j-- > 0;) {
      const std::size_t parent_count = prefix_count / q;
      std::vector<double> parent(parent_count * s_total, 0.0);
      for (std::size_t pf = 0; pf < parent_count; ++pf) {
        for (std::size_t d = 0; d < q; ++d) {
          const double* src = cur.data() + ((pf * q + d) * s_total);
          double* dst = parent.data() + pf * s_total;
          for (std::size_t sf = 0; sf < s_total; ++sf) dst[sf] += src[sf];
        }
      }
      double hj = 0.0;
      for (std::size_t pf = 0; pf < parent_count; ++pf) {
        for (std::size_t d = 0; d < q; ++d) {
          const double* src = cur.data() + ((pf * q + d) * s_total);
          const double* par = parent.data() + pf * s_total;
          for (std::size_t sf = 0; sf < s_total; ++sf) {
            if (src[sf] > 0.0) hj += src[sf] * std::log2(par[sf] / src[sf]);
          }
        }
      }
      h[j] = std::max(hj, 0.0);
      cur = std::move(parent);
      prefix_count = parent_count;
    }
    return h;
  };

  profile.h_uncond = profile_for({});
  for (const auto& group : spec.side_groups) {
    profile.h_cond.push_back(profile_for(group));
    profile.se_cond.emplace_back(N, 0.0);
  }
  profile.validate();
  return profile;
}

namespace {

struct McVisitor final : sc::ScEngine::Visitor {
  const std::vector<std::uint16_t>* u_true = nullptr;
  std::size_t tracks = 0;
  std::size_t N = 0;
  // Layout: [track][index] running sums of posterior entropies and squares.
  std::vector<double>* sum = nullptr;
  std::vector<double>* sum_sq = nullptr;

  std::uint16_t on_index(std::size_t index,
                         const sc::ScEngine::StepView& view) override {
    for (std::size_t t = 0; t < tracks; ++t) {
      const double h = prob::entropy_bits(view.posterior(t));
      (*sum)[t * N + index] += h;
      (*sum_sq)[t * N + index] += h * h;
    }
    return (*u_true)[index];
  }
};

}  // namespace

PolarProfile mc_profile(const SourceSpec& spec, int n, std::uint64_t samples,
                        std::uint64_t seed) {
  spec.validate();
  if (n < 0 || n > 20) throw ValidationError("unsupported transform order n");
  if (samples < 1) throw ValidationError("mc_profile needs samples >= 1");
  const std::size_t N = static_cast<std::size_t>(1) << n;
  const std::size_t q = spec.q();
  const std::size_t rank = spec.joint.rank();

  std::vector<sc::ScEngine::Track> tracks;
  tracks.push_back({{}});
  for (const auto& group : spec.side_groups) tracks.push_back({group});
  const std::size_t K = tracks.size();

  constexpr std::uint64_t kChunk = 256;
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> chunk_sum(chunks), chunk_sum_sq(chunks);

  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t ci) {
    Rng rng = Rng::derive(seed, ci);
    sc::ScEngine engine(spec.joint, spec.polarized_axis, tracks,
                        n);
    chunk_sum[ci].assign(K * N, 0.0);
    chunk_sum_sq[ci].assign(K * N, 0.0);

    McVisitor visitor;
    visitor.tracks = K;
    visitor.N = N;
    visitor.sum = &chunk_sum[ci];
    visitor.sum_sq = &chunk_sum_sq[ci];

    std::vector<std::vector<std::uint16_t>> side_values(rank);
    for (std::size_t a = 0; a < rank; ++a) side_values[a].assign(N, 0);
    std::vector<std::uint16_t> u_true(N), u_out(N);
    std::vector<std::size_t> idx(rank);

    const std::uint64_t begin = static_cast<std::uint64_t>(ci) * kChunk;
    const std::uint64_t end = std::min(begin + kChunk, samples);
    for (std::uint64_t s = begin; s < end; ++s) {
      for (std::size_t i = 0; i < N; ++i) {
        std::size_t flat = rng.sample_weights(spec.joint.values());
        for (std::size_t a = rank; a-- > 0;) {
          idx[a] = flat % spec.joint.dim(a);
          flat /= spec.joint.dim(a);
        }
        u_true[i] = static_cast<std::uint16_t>(idx[spec.polarized_axis]);
        for (std::size_t a = 0; a < rank; ++a) {
          side_values[a][i] = static_cast<std::uint16_t>(idx[a]);
        }
      }
      field::polar_transform_inplace(u_true, static_cast<std::uint16_t>(q));
      visitor.u_true = &u_true;
      engine.run_pass(side_values, visitor, u_out);
    }
  });

  std::vector<double> sum(K * N, 0.0), sum_sq(K * N, 0.0);
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    for (std::size_t i = 0; i < K * N; ++i) {
      sum[i] += chunk_sum[ci][i];
      sum_sq[i] += chunk_sum_sq[ci][i];
    }
  }

  const double S = static_cast<double>(samples);
  PolarProfile profile;
  profile.n = n;
  profile.alphabet = q;
  profile.method = PolarProfile::Method::MonteCarlo;
  profile.samples = samples;
  profile.seed = seed;
  auto finish = [&](std::size_t t, std::vector<double>& h,
                    std::vector<double>& se) {
    h.resize(N);
    se.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
      const double mean = sum[t * N + j] / S;
      h[j] = mean;
      if (samples > 1) {
        double var = (sum_sq[t * N + j] - S * mean * mean) / (S - 1.0);
        se[j] = std::sqrt(std::max(var, 0.0) / S);
      } else {
        se[j] = 0.0;
      }
    }
  };
  finish(0, profile.h_uncond, profile.se_uncond);
  for (std::size_t g = 0; g < spec.side_groups.size(); ++g) {
    std::vector<double> h, se;
    finish(g + 1, h, se);
    profile.h_cond.push_back(std::move(h));
    profile.se_cond.push_back(std::move(se));
  }
  profile.validate();
  return profile;
}

IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

IndexSet set_complement(const IndexSet& a, std::size_t n) {
  IndexSet out;
  std::size_t pos = 0;
  for (std::uint32_t j = 0; j < n; ++j) {
    if (pos < a.size() && a[pos] == j) {
      ++pos;
    } else {
      out.push_back(j);
    }
  }
  return out;
}

bool is_subset(const IndexSet& a, const IndexSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

IndexSets index_sets(const PolarProfile& profile, double delta_v,
                     double delta_h) {
  profile.validate();
  const double logq = profile.log2_alphabet();
  if (!(delta_v > 0.0) || !(delta_v < logq) || !(delta_h > 0.0) ||
      !(delta_h < logq)) {
    throw ValidationError("thresholds must lie strictly inside (0, log2 q)");
  }
  if (delta_v + delta_h >= logq) {
    throw ValidationError(
        "delta_v + delta_h >= log2(q): the very-high set would not be "
        "guaranteed inside the high set");
  }

  auto pick = [&](const std::vector<double>& h, double threshold) {
    IndexSet out;
    for (std::uint32_t j = 0; j < h.size(); ++j) {
      if (h[j] > threshold) out.push_back(j);
    }
    return out;
  };

  IndexSets sets;
  sets.delta_v = delta_v;
  sets.delta_h = delta_h;
  sets.v_uncond = pick(profile.h_uncond, logq - delta_v);
  sets.h_uncond = pick(profile.h_uncond, delta_h);
  for (const auto& h : profile.h_cond) {
    sets.v_cond.push_back(pick(h, logq - delta_v));
    sets.h_cond.push_back(pick(h, delta_h));
  }

  if (!is_subset(sets.v_uncond, sets.h_uncond)) {
    throw ValidationError("very-high set escaped the high set");
  }

  if (profile.h_cond.size() == 2) {
    // Two conditionings, read as (smaller, larger): assemble the partition.
    const IndexSet& v_small = sets.v_cond[0];
    const IndexSet& v_large = sets.v_cond[1];
    if (!is_subset(v_large, v_small) ||
        !is_subset(v_small, sets.h_uncond)) {
      throw ValidationError(
          "conditioned very-high sets are not nested; refine the profile "
          "(more samples or exact) before building the partition");
    }
    FPartition f;
    f.f1 = set_complement(sets.h_uncond, profile.size());
    f.f2 = v_large;
    f.f3 = set_difference(v_small, v_large);
    f.f4 = set_difference(sets.h_uncond, v_small);
    if (f.f1.size() + f.f2.size() + f.f3.size() + f.f4.size() !=
        profile.size()) {
      throw ValidationError("partition cells do not cover all indices");
    }
    sets.f = std::move(f);
  }
  return sets;
}

std::uint32_t smallest_prime_geq(std::uint32_t m) {
  if (m < 2) throw ValidationError("smallest_prime_geq needs m >= 2");
  std::uint32_t p = m;
  while (!field::is_prime(p)) ++p;
  return p;
}

double paper_delta(int n, double beta) {
  if (!(beta > 0.0) || beta >= 0.5) {
    throw ValidationError("beta must lie in (0, 1/2)");
  }
  const double N = std::pow(2.0, n);
  return std::pow(2.0, -std::pow(N, beta));
}

namespace {

using nlohmann::json;

std::string method_name(PolarProfile::Method m) {
  return m == PolarProfile::Method::Exact ? "exact" : "monte-carlo";
}

PolarProfile::Method method_from(const std::string& s) {
  if (s == "exact") return PolarProfile::Method::Exact;
  if (s == "monte-carlo") return PolarProfile::Method::MonteCarlo;
  throw ValidationError("unknown profile method: " + s);
}

}  // namespace

std::string PolarProfile::to_json() const {
  json j;
  j["format"] = "polarcov-profile";
  j["version"] = 1;
  j["n"] = n;
  j["q"] = alphabet;
  j["method"] = method_name(method);
  j["samples"] = samples;
  j["seed"] = seed;
  j["h_unconditioned"] = h_uncond;
  j["h_conditioned"] = h_cond;
  j["se_unconditioned"] = se_uncond;
  j["se_conditioned"] = se_cond;
  return j.dump(2);
}

PolarProfile PolarProfile::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != "polarcov-profile") {
    throw ValidationError("not a profile document");
  }
  PolarProfile p;
  p.n = j.at("n").get<int>();
  p.alphabet = j.at("q").get<std::size_t>();
  p.method = method_from(j.at("method").get<std::string>());
  p.samples = j.at("samples").get<std::uint64_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.h_uncond = j.at("h_unconditioned").get<std::vector<double>>();
  p.h_cond = j.at("h_conditioned").get<std::vector<std::vector<double>>>();
  p.se_uncond = j.at("se_unconditioned").get<std::vector<double>>();
  p.se_cond = j.at("se_conditioned").get<std::vector<std::vector<double>>>();
  p.validate();
  return p;
}

void PolarProfile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << to_json() << '\n';
}

PolarProfile PolarProfile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string IndexSets::to_json() const {
  json j;
  j["format"] = "polarcov-sets";
  j["version"] = 1;
  j["delta_v"] = delta_v;
  j["delta_h"] = delta_h;
  j["v_unconditioned"] = v_uncond;
  j["h_unconditioned"] = h_uncond;
  j["v_conditioned"] = v_cond;
  j["h_conditioned"] = h_cond;
  if (f.has_value()) {
    j["partition"] = {{"f1", f->f1}, {"f2", f->f2}, {"f3", f->f3},
                      {"f4", f->f4}};
  }
  return j.dump(2);
}

}  // namespace polarcov::polarize
