#include "polarcov/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "polarcov/oracle.hpp"

namespace polarcov::bench {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<double, double> Thresholds::resolve(int n) const {
  if (beta.has_value()) {
    if (delta_v.has_value() || delta_h.has_value()) {
      throw ValidationError("thresholds: give either the preset or explicit "
                            "values, not both");
    }
    const double d = polarize::paper_delta(n, *beta);
    return {d, d};
  }
  if (!delta_v.has_value() || !delta_h.has_value()) {
    throw ValidationError("thresholds: need beta or both delta_v and delta_h");
  }
  return {*delta_v, *delta_h};
}

std::string Thresholds::describe() const {
  if (beta.has_value()) {
    return "paper-delta(beta=" + std::to_string(*beta) + ")";
  }
  return "explicit(delta_v=" + std::to_string(delta_v.value_or(0.0)) +
         ", delta_h=" + std::to_string(delta_h.value_or(0.0)) + ")";
}

namespace {

prob::JointPmf parse_nested_joint(const json& arr) {
  if (!arr.is_array() || arr.empty()) {
    throw ValidationError("target joint must be a nonempty array");
  }
  if (arr[0].is_array() && !arr[0].empty() && arr[0][0].is_array()) {
    // three axes
    const std::size_t d0 = arr.size();
    const std::size_t d1 = arr[0].size();
    const std::size_t d2 = arr[0][0].size();
    std::vector<double> p;
    p.reserve(d0 * d1 * d2);
    for (const auto& plane : arr) {
      if (plane.size() != d1) throw ValidationError("ragged target table");
      for (const auto& row : plane) {
        if (row.size() != d2) throw ValidationError("ragged target table");
        for (const auto& v : row) p.push_back(v.get<double>());
      }
    }
    return prob::JointPmf({d0, d1, d2}, std::move(p));
  }
  if (arr[0].is_array()) {
    const std::size_t d0 = arr.size();
    const std::size_t d1 = arr[0].size();
    std::vector<double> p;
    p.reserve(d0 * d1);
    for (const auto& row : arr) {
      if (row.size() != d1) throw ValidationError("ragged target table");
      for (const auto& v : row) p.push_back(v.get<double>());
    }
    return prob::JointPmf({d0, d1}, std::move(p));
  }
  throw ValidationError("target joint must have two or three axes");
}

prob::JointPmf load_target_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open target file " + path);
  json j = json::parse(in);
  if (j.contains("joint")) return parse_nested_joint(j["joint"]);
  if (j.contains("dims") && j.contains("p")) {
    return prob::JointPmf(j["dims"].get<std::vector<std::size_t>>(),
                          j["p"].get<std::vector<double>>());
  }
  throw ValidationError("target file needs either joint or dims+p");
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json double_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text,
                                             const std::string& base_dir) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("scheme")) {
    cfg.scheme = schemes::scheme_from_name(j["scheme"].get<std::string>());
  }
  if (j.contains("target")) {
    const auto& t = j["target"];
    if (t.contains("file")) {
      fs::path p = t["file"].get<std::string>();
      if (p.is_relative()) p = fs::path(base_dir) / p;
      cfg.target = load_target_file(p.string());
    } else if (t.contains("joint")) {
      cfg.target = parse_nested_joint(t["joint"]);
    } else {
      throw ValidationError("target needs a joint table or a file path");
    }
  }
  if (j.contains("n")) {
    if (j["n"].is_array()) {
      cfg.n_list = j["n"].get<std::vector<int>>();
    } else {
      cfg.n_list = {j["n"].get<int>()};
    }
  }
  if (j.contains("k")) {
    if (j["k"].is_array()) {
      cfg.k_list = j["k"].get<std::vector<int>>();
    } else {
      cfg.k_list = {j["k"].get<int>()};
    }
  }
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    if (t.contains("preset")) {
      if (t["preset"].get<std::string>() != "paper-delta") {
        throw ValidationError("unknown threshold preset");
      }
      cfg.thresholds.beta = t.value("beta", 0.3);
    }
    if (t.contains("delta_v")) cfg.thresholds.delta_v = t["delta_v"].get<double>();
    if (t.contains("delta_h")) cfg.thresholds.delta_h = t["delta_h"].get<double>();
  } else {
    cfg.thresholds.beta = 0.3;
  }
  cfg.trials = j.value("trials", 100);
  cfg.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("estimator")) {
    cfg.estimator.profile_samples =
        j["estimator"].value("profile_samples", std::uint64_t{20000});
    cfg.estimator.bootstrap_resamples =
        j["estimator"].value("bootstrap", 1000);
  }
  if (j.contains("epsilons")) {
    cfg.epsilons = j["epsilons"].get<std::vector<double>>();
  }
  cfg.out_dir = j.value("out", std::string("out"));
  if (j.contains("profile_budget")) {
    cfg.profile_budget = j["profile_budget"].get<std::size_t>();
  }
  cfg.save_transcripts = j.value("save_transcripts", 0);
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), fs::path(path).parent_path().string());
}

void ExperimentConfig::validate() const {
  if (!target.has_value()) throw ValidationError("config needs a target joint");
  if (n_list.empty()) throw ValidationError("config needs at least one n");
  if (k_list.empty()) throw ValidationError("config needs at least one k");
  for (int n : n_list) {
    if (n < 1 || n > 20) throw ValidationError("n out of range");
  }
  for (int k : k_list) {
    if (k < 1) throw ValidationError("k must be at least 1");
  }
  if (trials < 1) throw ValidationError("trials must be at least 1");

  const auto& t = *target;
  switch (scheme) {
    case schemes::SchemeKind::Resolvability:
      if (t.rank() != 2) {
        throw ValidationError("resolvability target must have axes (X, Y)");
      }
      if (!field::is_prime(static_cast<std::uint32_t>(t.dim(0)))) {
        throw ValidationError(
            "resolvability requires |X| to be a prime number, got " +
            std::to_string(t.dim(0)));
      }
      break;
    case schemes::SchemeKind::Empirical:
      if (t.rank() != 2) {
        throw ValidationError("empirical target must have axes (X, Y)");
      }
      if (!field::is_prime(static_cast<std::uint32_t>(t.dim(1)))) {
        throw ValidationError(
            "empirical coordination requires |Y| to be a prime number, got " +
            std::to_string(t.dim(1)));
      }
      break;
    case schemes::SchemeKind::Strong:
      if (t.rank() != 3) {
        throw ValidationError("strong target must have axes (X, V, Y)");
      }
      if (!field::is_prime(static_cast<std::uint32_t>(t.dim(1))) ||
          !field::is_prime(static_cast<std::uint32_t>(t.dim(2)))) {
        throw ValidationError(
            "strong coordination requires |V| and |Y| to be prime numbers");
      }
      schemes::strong_source_middle(t).validate();
      break;
  }
}

std::string csv_header() {
  return "scheme,N,k,seed,rate_msg,rate_shared,rate_trace,rate_local,"
         "v_dist,kl,histogram_dist";
}

std::string csv_row(const TrialRow& row) {
  std::string out = row.scheme;
  out += ',';
  out += std::to_string(row.N);
  out += ',';
  out += std::to_string(row.k);
  out += ',';
  out += std::to_string(row.seed);
  for (double v : {row.rate_msg, row.rate_shared, row.rate_trace,
                   row.rate_local, row.v_dist, row.kl, row.histogram_dist}) {
    out += ',';
    out += format_double(v);
  }
  return out;
}

VdistEstimate estimate_vdist(const prob::TypeHistogram& type,
                             const prob::JointPmf& target,
                             int bootstrap_resamples, std::uint64_t seed) {
  if (type.total() < 1000) {
    throw ValidationError(
        "estimate_vdist needs at least 1000 samples, got " +
        std::to_string(type.total()));
  }
  if (bootstrap_resamples < 1) {
    throw ValidationError("need at least one bootstrap resample");
  }
  VdistEstimate est;
  est.samples = type.total();
  est.value = prob::variational_distance(target, type);

  // Resample cells from the empirical distribution itself.
  const prob::JointPmf freq = type.frequencies();
  const std::size_t cells = freq.flat_size();
  std::vector<double> cumulative(cells);
  double acc = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    acc += freq.at_flat(c);
    cumulative[c] = acc;
  }

  Rng rng(seed);
  std::vector<double> stats(static_cast<std::size_t>(bootstrap_resamples));
  std::vector<double> counts(cells);
  for (auto& stat : stats) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::uint64_t s = 0; s < type.total(); ++s) {
      const double u = rng.uniform01() * acc;
      const auto it =
          std::lower_bound(cumulative.begin(), cumulative.end(), u);
      const std::size_t c = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                   static_cast<std::ptrdiff_t>(cells) - 1));
      counts[c] += 1.0;
    }
    double v = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      v += std::abs(counts[c] / static_cast<double>(type.total()) -
                    target.at_flat(c));
    }
    stat = v;
  }
  std::sort(stats.begin(), stats.end());
  const auto pick = [&](double p) {
    const auto idx = static_cast<std::size_t>(
        p * static_cast<double>(stats.size() - 1));
    return stats[idx];
  };
  est.ci_low = pick(0.025);
  est.ci_high = pick(0.975);
  return est;
}

double hoeffding_budget(std::size_t block_len, double eps, std::size_t x_size,
                        std::size_t y_size) {
  const double xy = static_cast<double>(x_size) * static_cast<double>(y_size);
  return 2.0 * xy *
         std::exp(-static_cast<double>(block_len) * eps * eps /
                  (2.0 * xy * xy));
}

namespace {

struct CellContext {
  std::optional<schemes::ResolvabilityContext> res;
  std::optional<schemes::EmpiricalContext> emp;
  std::optional<schemes::StrongContext> strong;
  std::string profile_method;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, json
};

polarize::PolarProfile compute_profile(const polarize::SourceSpec& spec,
                                       int n, const ExperimentConfig& cfg,
                                       std::uint64_t salt, std::string* method) {
  try {
    auto p = polarize::exact_profile(spec, n, cfg.profile_budget);
    if (method->empty()) *method = "exact";
    return p;
  } catch (const BudgetError&) {
    *method = "monte-carlo";
    const std::uint64_t seed =
        splitmix64(cfg.seed ^ splitmix64(0xA11CE + salt +
                                         static_cast<std::uint64_t>(n)));
    return polarize::mc_profile(spec, n, cfg.estimator.profile_samples, seed);
  }
}

CellContext build_cell(const ExperimentConfig& cfg, int n) {
  const auto [dv, dh] = cfg.thresholds.resolve(n);
  const auto& target = *cfg.target;
  CellContext cell;
  const std::string tag = schemes::scheme_name(cfg.scheme);
  switch (cfg.scheme) {
    case schemes::SchemeKind::Resolvability: {
      const auto spec = schemes::resolvability_source(target);
      const auto profile =
          compute_profile(spec, n, cfg, 1, &cell.profile_method);
      cell.res = schemes::make_resolvability_context(target, n, profile, dv, dh);
      cell.artifacts.emplace_back("profile_" + tag + "_n" + std::to_string(n),
                                  profile.to_json());
      cell.artifacts.emplace_back(
          "sets_" + tag + "_n" + std::to_string(n),
          polarize::index_sets(profile, dv, dh).to_json());
      break;
    }
    case schemes::SchemeKind::Empirical: {
      const auto spec = schemes::empirical_source(target);
      const auto profile =
          compute_profile(spec, n, cfg, 1, &cell.profile_method);
      cell.emp = schemes::make_empirical_context(target, n, profile, dv, dh);
      cell.artifacts.emplace_back("profile_" + tag + "_n" + std::to_string(n),
                                  profile.to_json());
      cell.artifacts.emplace_back(
          "sets_" + tag + "_n" + std::to_string(n),
          polarize::index_sets(profile, dv, dh).to_json());
      break;
    }
    case schemes::SchemeKind::Strong: {
      const auto spec_mid = schemes::strong_source_middle(target);
      const auto spec_out = schemes::strong_source_output(target);
      const auto pm = compute_profile(spec_mid, n, cfg, 1, &cell.profile_method);
      std::string method_out;
      const auto po = compute_profile(spec_out, n, cfg, 2, &method_out);
      cell.strong = schemes::make_strong_context(target, n, pm, po, dv, dh);
      cell.artifacts.emplace_back("profile_" + tag + "_middle_n" +
                                      std::to_string(n),
                                  pm.to_json());
      cell.artifacts.emplace_back("profile_" + tag + "_output_n" +
                                      std::to_string(n),
                                  po.to_json());
      cell.artifacts.emplace_back(
          "sets_" + tag + "_middle_n" + std::to_string(n),
          polarize::index_sets(pm, dv, dh).to_json());
      cell.artifacts.emplace_back(
          "sets_" + tag + "_output_n" + std::to_string(n),
          polarize::index_sets(po, dv, dh).to_json());
      break;
    }
  }
  return cell;
}

struct TrialOutcome {
  TrialRow row;
  std::vector<double> block_dists;
  prob::TypeHistogram pooled;
};

// Action-pair axes of the target joint: (input, output) for resolvability
// and empirical, (X, Y) around the middle variable for strong.
std::pair<std::size_t, std::size_t> pair_axes(schemes::SchemeKind kind) {
  if (kind == schemes::SchemeKind::Strong) return {0, 2};
  return {0, 1};
}

TrialOutcome evaluate_trial(const ExperimentConfig& cfg, const CellContext& cell,
                            int n, int k, std::uint64_t chain_seed) {
  const auto& target = *cfg.target;
  const auto [ax, ay] = pair_axes(cfg.scheme);
  const std::size_t qx = target.dim(ax);
  const std::size_t qy = target.dim(ay);
  const std::size_t axes[] = {ax, ay};
  const prob::JointPmf pair_target = target.marginal(axes);

  schemes::Transcript tr =
      cfg.scheme == schemes::SchemeKind::Resolvability
          ? schemes::run_resolvability(*cell.res, k, chain_seed)
          : cfg.scheme == schemes::SchemeKind::Empirical
                ? schemes::run_empirical(*cell.emp, k, chain_seed)
                : schemes::run_strong(*cell.strong, k, chain_seed);

  TrialOutcome out{TrialRow{}, {}, prob::TypeHistogram(qx, qy)};
  const std::size_t N = std::size_t{1} << n;

  for (const auto& block : tr.blocks) {
    prob::TypeHistogram t(qx, qy);
    for (std::size_t i = 0; i < N; ++i) {
      t.add_pair(block.x[i], (*block.y)[i]);
    }
    out.block_dists.push_back(prob::variational_distance(pair_target, t));
    out.pooled.merge(t);
  }

  TrialRow& row = out.row;
  row.scheme = schemes::scheme_name(cfg.scheme);
  row.N = N;
  row.k = k;
  row.seed = chain_seed;

  const double kN = static_cast<double>(k) * static_cast<double>(N);
  const std::size_t pol_axis =
      cfg.scheme == schemes::SchemeKind::Resolvability
          ? 0
          : cfg.scheme == schemes::SchemeKind::Empirical ? 1 : 1;
  const double logq_pol = std::log2(static_cast<double>(target.dim(pol_axis)));
  const double logq_out = std::log2(static_cast<double>(qy));

  std::size_t msg_per_block = 0;
  if (cfg.scheme == schemes::SchemeKind::Empirical) {
    msg_per_block = cell.emp->message_set.size();
  } else if (cfg.scheme == schemes::SchemeKind::Strong) {
    msg_per_block = cell.strong->f.f4.size();
  }
  row.rate_msg = static_cast<double>(msg_per_block) * logq_pol /
                 static_cast<double>(N);
  row.rate_shared =
      static_cast<double>(tr.ledger.shared_recycled + tr.ledger.shared_fresh) *
      logq_pol / kN;
  const std::uint64_t trace_syms =
      cfg.scheme == schemes::SchemeKind::Resolvability
          ? tr.ledger.local_conditional
          : tr.ledger.transmitted_trace;
  row.rate_trace = static_cast<double>(trace_syms) * logq_pol / kN;
  row.rate_local =
      cfg.scheme == schemes::SchemeKind::Strong
          ? static_cast<double>(tr.ledger.local_uniform +
                                tr.ledger.local_conditional) *
                logq_out / kN
          : 0.0;

  double mean_block = 0.0;
  for (double v : out.block_dists) mean_block += v;
  row.v_dist = mean_block / static_cast<double>(out.block_dists.size());
  row.histogram_dist = prob::variational_distance(pair_target, out.pooled);
  row.kl = prob::kl_divergence(out.pooled.frequencies(), pair_target);
  return out;
}

json rate_report_json(const schemes::RateReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"name", r.name},
                    {"fraction", r.fraction},
                    {"bits", r.bits},
                    {"target_bits", r.target_bits}});
  }
  return rows;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);

  RunResult result;
  std::vector<fs::path> written;
  auto cleanup = [&]() {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  };

  try {
    const auto [ax, ay] = pair_axes(cfg.scheme);
    const std::size_t pair_dims[] = {ax, ay};
    const prob::JointPmf pair_target = cfg.target->marginal(pair_dims);

    std::ostringstream csv;
    csv << csv_header() << '\n';

    json cells_json = json::array();

    for (int n : cfg.n_list) {
      CellContext cell = build_cell(cfg, n);
      const std::size_t N = std::size_t{1} << n;

      for (const auto& [name, text] : cell.artifacts) {
        const fs::path p = out_dir / (name + ".json");
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ValidationError("cannot write " + p.string());
        f << text << '\n';
        written.push_back(p);
        result.artifact_paths.push_back(p.string());
      }

      for (int k : cfg.k_list) {
        const std::uint64_t cell_stream = splitmix64(
            cfg.seed ^ splitmix64((static_cast<std::uint64_t>(n) << 32) |
                                  static_cast<std::uint64_t>(k)));

        std::vector<TrialOutcome> outcomes(
            static_cast<std::size_t>(cfg.trials),
            TrialOutcome{TrialRow{}, {}, prob::TypeHistogram(1, 1)});
        parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t t) {
          const std::uint64_t chain_seed =
              splitmix64(cell_stream ^ splitmix64(t + 0xC0FFEE));
          outcomes[t] = evaluate_trial(cfg, cell, n, k, chain_seed);
        });

        prob::TypeHistogram pooled(cfg.target->dim(ax), cfg.target->dim(ay));
        for (const auto& o : outcomes) {
          csv << csv_row(o.row) << '\n';
          pooled.merge(o.pooled);
        }

        // aggregates
        auto mean_std = [&](auto getter) {
          double mean = 0.0;
          for (const auto& o : outcomes) mean += getter(o.row);
          mean /= static_cast<double>(outcomes.size());
          double var = 0.0;
          for (const auto& o : outcomes) {
            const double d = getter(o.row) - mean;
            var += d * d;
          }
          var = outcomes.size() > 1
                    ? var / static_cast<double>(outcomes.size() - 1)
                    : 0.0;
          return std::pair<double, double>(mean, std::sqrt(var));
        };
        const auto [vd_mean, vd_std] =
            mean_std([](const TrialRow& r) { return r.v_dist; });
        const auto [hd_mean, hd_std] =
            mean_std([](const TrialRow& r) { return r.histogram_dist; });
        const auto [kl_mean, kl_std] =
            mean_std([](const TrialRow& r) { return r.kl; });

        // exceedance audit rows
        json exceed = json::array();
        for (double eps : cfg.epsilons) {
          std::size_t joint_hits = 0, block_hits = 0, block_total = 0;
          for (const auto& o : outcomes) {
            joint_hits += o.row.histogram_dist > eps;
            for (double b : o.block_dists) {
              block_hits += b > eps;
              ++block_total;
            }
          }
          const double p_joint = static_cast<double>(joint_hits) /
                                 static_cast<double>(outcomes.size());
          const double p_block = static_cast<double>(block_hits) /
                                 static_cast<double>(block_total);
          const double budget =
              hoeffding_budget(N, eps, cfg.target->dim(ax), cfg.target->dim(ay));
          const double b_eff = std::min(budget, 1.0);
          const double sigma =
              std::sqrt(b_eff * (1.0 - b_eff) /
                        static_cast<double>(outcomes.size()));
          const bool holds = p_joint <= budget + 3.0 * sigma;
          exceed.push_back({{"eps", eps},
                            {"p_joint", p_joint},
                            {"p_block", p_block},
                            {"budget", double_or_string(budget)},
                            {"sigma", sigma},
                            {"holds", holds}});
        }

        json pooled_json;
        if (pooled.total() >= 1000) {
          const VdistEstimate pooled_est = estimate_vdist(
              pooled, pair_target, cfg.estimator.bootstrap_resamples,
              splitmix64(cell_stream ^ 0xB00757));
          pooled_json = {{"value", pooled_est.value},
                         {"ci_low", pooled_est.ci_low},
                         {"ci_high", pooled_est.ci_high},
                         {"samples", pooled_est.samples},
                         {"method", "plug-in"}};
        } else {
          pooled_json = {{"skipped", "needs at least 1000 pooled samples"},
                         {"samples", pooled.total()}};
        }

        json cell_json = {
            {"n", n},
            {"N", N},
            {"k", k},
            {"trials", cfg.trials},
            {"profile_method", cell.profile_method},
            {"aggregates",
             {{"v_dist", {{"mean", vd_mean}, {"std", vd_std}}},
              {"histogram_dist", {{"mean", hd_mean}, {"std", hd_std}}},
              {"kl", {{"mean", double_or_string(kl_mean)},
                      {"std", double_or_string(kl_std)}}}}},
            {"exceedance", exceed},
            {"pooled_vdist", pooled_json},
        };
        if (cfg.scheme == schemes::SchemeKind::Resolvability) {
          cell_json["rates"] = rate_report_json(schemes::rate_report(*cell.res, k));
        } else if (cfg.scheme == schemes::SchemeKind::Empirical) {
          cell_json["rates"] = rate_report_json(schemes::rate_report(*cell.emp, k));
        } else {
          cell_json["rates"] =
              rate_report_json(schemes::rate_report(*cell.strong, k));
        }
        json hashes = json::object();
        for (const auto& [name, text] : cell.artifacts) {
          hashes[name] = fnv1a64_hex(text);
        }
        cell_json["artifact_hashes"] = hashes;

        // At enumerable sizes with exact profiles, audit the divergence
        // identity right in the summary.
        if (cell.profile_method == "exact" && n <= 3) {
          try {
            const oracle::IdentityAudit audit =
                cfg.scheme == schemes::SchemeKind::Resolvability
                    ? oracle::divergence_identity_audit(*cell.res)
                    : cfg.scheme == schemes::SchemeKind::Empirical
                          ? oracle::divergence_identity_audit(*cell.emp)
                          : oracle::divergence_identity_audit(*cell.strong);
            cell_json["oracle"] = {
                {"divergence_identity",
                 {{"enumerated", audit.enumerated},
                  {"profile_sum", audit.profile_sum},
                  {"holds", audit.holds}}}};
          } catch (const BudgetError&) {
            // enumeration too large for this cell; skip silently
          }
        }
        cells_json.push_back(std::move(cell_json));

        // Chain runs are deterministic in their seed, so saved transcripts
        // are replays of the corresponding trials.
        const int keep = std::min(cfg.save_transcripts, cfg.trials);
        for (int t = 0; t < keep; ++t) {
          const std::uint64_t chain_seed = splitmix64(
              cell_stream ^ splitmix64(static_cast<std::uint64_t>(t) + 0xC0FFEE));
          schemes::Transcript tr =
              cfg.scheme == schemes::SchemeKind::Resolvability
                  ? schemes::run_resolvability(*cell.res, k, chain_seed)
                  : cfg.scheme == schemes::SchemeKind::Empirical
                        ? schemes::run_empirical(*cell.emp, k, chain_seed)
                        : schemes::run_strong(*cell.strong, k, chain_seed);
          const fs::path tp =
              out_dir / ("transcript_" + schemes::scheme_name(cfg.scheme) +
                         "_n" + std::to_string(n) + "_k" + std::to_string(k) +
                         "_t" + std::to_string(t) + ".json");
          std::ofstream f(tp, std::ios::binary);
          if (!f) throw ValidationError("cannot write " + tp.string());
          f << tr.to_json() << '\n';
          written.push_back(tp);
          result.artifact_paths.push_back(tp.string());
        }
      }
    }

    const fs::path csv_path = out_dir / "metrics.csv";
    {
      std::ofstream f(csv_path, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + csv_path.string());
      f << csv.str();
      written.push_back(csv_path);
    }
    result.csv_path = csv_path.string();

    json summary;
    summary["format"] = "polarcov-summary";
    summary["version"] = 1;
    summary["config"] = {
        {"scheme", schemes::scheme_name(cfg.scheme)},
        {"target_dims", cfg.target->dims()},
        {"target_hash",
         fnv1a64_hex(json(std::vector<double>(cfg.target->values().begin(),
                                              cfg.target->values().end()))
                         .dump())},
        {"n", cfg.n_list},
        {"k", cfg.k_list},
        {"thresholds", cfg.thresholds.describe()},
        {"trials", cfg.trials},
        {"seed", cfg.seed},
        {"profile_samples", cfg.estimator.profile_samples},
        {"epsilons", cfg.epsilons},
    };
    summary["cells"] = std::move(cells_json);
    summary["timestamp"] = timestamp_utc();

    const fs::path summary_path = out_dir / "summary.json";
    {
      std::ofstream f(summary_path, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + summary_path.string());
      f << summary.dump(2) << '\n';
      written.push_back(summary_path);
    }
    result.summary_path = summary_path.string();
    return result;
  } catch (...) {
    cleanup();
    throw;
  }
}

}  // namespace polarcov::bench
