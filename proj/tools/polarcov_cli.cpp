// Command-line front end: profile and set computation, the three scheme
// runners, and the small-instance oracle audit.
//
// Exit codes: 0 success, 1 failed audit or internal error, 2 invalid
// configuration, 3 enumeration budget exceeded.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polarcov/experiment.hpp"
#include "polarcov/oracle.hpp"
#include "polarcov/polarize.hpp"
#include "polarcov/schemes.hpp"

namespace fs = std::filesystem;
using namespace polarcov;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<int> n_override;
  std::vector<int> k_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> trials_override;
  std::optional<std::string> out_override;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--n", opts.n_override, "override transform orders");
  cmd->add_option("--k", opts.k_override, "override block counts");
  cmd->add_option("--seed", opts.seed_override, "override master seed");
  cmd->add_option("--trials", opts.trials_override, "override trial count");
  cmd->add_option("--out", opts.out_override, "override output directory");
}

bench::ExperimentConfig load_config(const CommonOptions& opts) {
  auto cfg = bench::ExperimentConfig::load(opts.config_path);
  if (!opts.n_override.empty()) cfg.n_list = opts.n_override;
  if (!opts.k_override.empty()) cfg.k_list = opts.k_override;
  if (opts.seed_override) cfg.seed = *opts.seed_override;
  if (opts.trials_override) cfg.trials = *opts.trials_override;
  if (opts.out_override) cfg.out_dir = *opts.out_override;
  return cfg;
}

int run_scheme(const CommonOptions& opts, schemes::SchemeKind kind) {
  auto cfg = load_config(opts);
  cfg.scheme = kind;
  const auto result = bench::run_experiment(cfg);
  std::cout << "metrics: " << result.csv_path << '\n';
  std::cout << "summary: " << result.summary_path << '\n';
  return 0;
}

// Writes the profiles the configured scheme needs at order n.
int run_profile(const CommonOptions& opts, bool also_sets) {
  auto cfg = load_config(opts);
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  const int n = cfg.n_list.front();
  const auto [dv, dh] = cfg.thresholds.resolve(n);

  std::vector<std::pair<std::string, polarize::SourceSpec>> specs;
  const std::string tag = schemes::scheme_name(cfg.scheme);
  switch (cfg.scheme) {
    case schemes::SchemeKind::Resolvability:
      specs.emplace_back(tag, schemes::resolvability_source(*cfg.target));
      break;
    case schemes::SchemeKind::Empirical:
      specs.emplace_back(tag, schemes::empirical_source(*cfg.target));
      break;
    case schemes::SchemeKind::Strong:
      specs.emplace_back(tag + "_middle",
                         schemes::strong_source_middle(*cfg.target));
      specs.emplace_back(tag + "_output",
                         schemes::strong_source_output(*cfg.target));
      break;
  }

  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& [name, spec] = specs[i];
    polarize::PolarProfile profile;
    try {
      profile = polarize::exact_profile(spec, n, cfg.profile_budget);
    } catch (const BudgetError&) {
      const std::uint64_t seed = splitmix64(
          cfg.seed ^ splitmix64(0xA11CE + i + static_cast<std::uint64_t>(n)));
      profile = polarize::mc_profile(spec, n, cfg.estimator.profile_samples,
                                     seed);
    }
    const fs::path ppath =
        fs::path(cfg.out_dir) / ("profile_" + name + "_n" + std::to_string(n) + ".json");
    profile.save(ppath.string());
    std::cout << "profile: " << ppath.string() << '\n';
    if (also_sets) {
      const auto sets = polarize::index_sets(profile, dv, dh);
      const fs::path spath =
          fs::path(cfg.out_dir) / ("sets_" + name + "_n" + std::to_string(n) + ".json");
      std::ofstream f(spath, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + spath.string());
      f << sets.to_json() << '\n';
      std::cout << "sets: " << spath.string() << '\n';
    }
  }
  return 0;
}

struct AuditLine {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

void print_line(const AuditLine& line) {
  std::cout << (line.holds ? "[ok]   " : "[FAIL] ") << line.name
            << "  lhs=" << line.lhs << "  rhs=" << line.rhs << '\n';
}

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

int run_oracle_check(const CommonOptions& opts) {
  auto cfg = load_config(opts);
  cfg.validate();
  const int n = cfg.n_list.front();
  if (n > 3) {
    throw BudgetError("oracle-check enumerates exhaustively; use n <= 3");
  }
  const int k = cfg.k_list.front();
  const auto [dv, dh] = cfg.thresholds.resolve(n);
  const std::size_t N = std::size_t{1} << n;

  std::vector<AuditLine> lines;
  auto audit_eq = [&](const std::string& name, double lhs, double rhs) {
    lines.push_back({name, lhs, rhs, std::abs(lhs - rhs) <= 1e-9});
  };
  auto audit_le = [&](const std::string& name, double lhs, double rhs) {
    lines.push_back({name, lhs, rhs, lhs <= rhs + 1e-9});
  };

  switch (cfg.scheme) {
    case schemes::SchemeKind::Resolvability: {
      const auto profile = polarize::exact_profile(
          schemes::resolvability_source(*cfg.target), n, cfg.profile_budget);
      const auto ctx = schemes::make_resolvability_context(*cfg.target, n,
                                                           profile, dv, dh);
      const auto law = oracle::enumerate_induced(ctx);
      const double logq = std::log2(static_cast<double>(cfg.target->dim(0)));
      const double expect = deficit_sum(profile.h_uncond, logq, ctx.very_high);
      const std::string xn[] = {"x"};
      const auto mx = oracle::exact_metrics(
          law, xn,
          oracle::iid_block(cfg.target->marginal_pmf(0), static_cast<int>(N)));
      audit_eq("divergence-identity", mx.kl_target_vs_induced, expect);

      double deff = 0.0;
      for (std::uint32_t j : ctx.very_high) {
        deff = std::max(deff, logq - profile.h_uncond[j]);
      }
      audit_le("divergence-cap", mx.kl_target_vs_induced,
               static_cast<double>(ctx.very_high.size()) * deff);

      const auto chain = oracle::enumerate_chain(ctx, std::max(k, 2), true);
      const std::string y1[] = {"y1"}, y2[] = {"y2"}, cb[] = {"cbar"};
      audit_le("interblock-dependence", chain.mutual_information(y1, y2),
               chain.mutual_information(y2, cb));

      // Reversed-direction bound for the output marginal; needs a
      // full-support output target.
      const prob::Pmf qy = cfg.target->marginal_pmf(1);
      if (qy.min_prob() > 0.0) {
        const std::string yn[] = {"y"};
        const auto my = oracle::exact_metrics(
            law, yn, oracle::iid_block(qy, static_cast<int>(N)));
        const std::string xyn[] = {"x", "y"};
        const auto mxy = oracle::exact_metrics(
            law, xyn, oracle::iid_pair_block(*cfg.target, static_cast<int>(N)));
        const double rhs = static_cast<double>(N) * std::log2(1.0 / qy.min_prob()) *
                           std::sqrt(prob::kTwoLn2) *
                           std::sqrt(mxy.kl_target_vs_induced);
        audit_le("output-chain-bound", my.kl_induced_vs_target, rhs);
      } else {
        std::cout << "[skip] output-chain-bound: target output distribution "
                     "is not full-support\n";
      }
      break;
    }
    case schemes::SchemeKind::Empirical: {
      const auto profile = polarize::exact_profile(
          schemes::empirical_source(*cfg.target), n, cfg.profile_budget);
      const auto ctx =
          schemes::make_empirical_context(*cfg.target, n, profile, dv, dh);
      const auto law = oracle::enumerate_induced(ctx);
      const double logq = std::log2(static_cast<double>(cfg.target->dim(1)));
      const double expect =
          deficit_sum(profile.h_cond[0], logq, ctx.very_high_given_side) +
          gap_sum(profile.h_uncond, profile.h_cond[0], ctx.trace_set);
      const std::string names[] = {"x", "y"};
      const auto m = oracle::exact_metrics(
          law, names, oracle::iid_pair_block(*cfg.target, static_cast<int>(N)));
      audit_eq("conditional-divergence-identity", m.kl_target_vs_induced,
               expect);

      double deff = 0.0;
      for (std::uint32_t j : ctx.very_high_given_side) {
        deff = std::max(deff, logq - profile.h_cond[0][j]);
      }
      for (std::uint32_t j : ctx.trace_set) {
        deff = std::max(deff, profile.h_uncond[j] - profile.h_cond[0][j]);
      }
      audit_le("variational-pinsker-bound", m.v_dist,
               std::sqrt(prob::kTwoLn2) *
                   std::sqrt(static_cast<double>(N) * deff));
      break;
    }
    case schemes::SchemeKind::Strong: {
      const auto pm = polarize::exact_profile(
          schemes::strong_source_middle(*cfg.target), n, cfg.profile_budget);
      const auto po = polarize::exact_profile(
          schemes::strong_source_output(*cfg.target), n, cfg.profile_budget);
      const auto ctx =
          schemes::make_strong_context(*cfg.target, n, pm, po, dv, dh);
      const auto law = oracle::enumerate_induced(ctx);
      const double logqv = std::log2(static_cast<double>(cfg.target->dim(1)));
      polarize::IndexSet frozen;
      frozen.insert(frozen.end(), ctx.f.f2.begin(), ctx.f.f2.end());
      frozen.insert(frozen.end(), ctx.f.f3.begin(), ctx.f.f3.end());
      std::sort(frozen.begin(), frozen.end());
      const double expect =
          deficit_sum(pm.h_cond[0], logqv, frozen) +
          gap_sum(pm.h_uncond, pm.h_cond[0], ctx.f.f1);
      const std::size_t xv_axes[] = {0, 1};
      const std::string xv[] = {"x", "v"};
      const auto m_xv = oracle::exact_metrics(
          law, xv,
          oracle::iid_pair_block(cfg.target->marginal(xv_axes),
                                 static_cast<int>(N)));
      audit_eq("middle-divergence-identity", m_xv.kl_target_vs_induced, expect);

      const std::size_t vy_axes[] = {1, 2};
      const std::string vy[] = {"v", "y"};
      const auto m_vy = oracle::exact_metrics(
          law, vy,
          oracle::iid_pair_block(cfg.target->marginal(vy_axes),
                                 static_cast<int>(N)));
      const std::string vn[] = {"v"};
      const auto m_v = oracle::exact_metrics(
          law, vn,
          oracle::iid_block(cfg.target->marginal_pmf(1), static_cast<int>(N)));
      const double sim_expect = deficit_sum(
          po.h_cond[0], std::log2(static_cast<double>(cfg.target->dim(2))),
          ctx.local_uniform_set);
      audit_eq("simulation-divergence-identity",
               m_vy.kl_target_vs_induced - m_v.kl_target_vs_induced,
               sim_expect);
      break;
    }
  }

  bool all = true;
  for (const auto& line : lines) {
    print_line(line);
    all = all && line.holds;
  }

  if (opts.out_override || !cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    json report;
    report["format"] = "polarcov-oracle-check";
    report["scheme"] = schemes::scheme_name(cfg.scheme);
    report["n"] = n;
    report["k"] = k;
    json rows = json::array();
    for (const auto& line : lines) {
      rows.push_back({{"name", line.name},
                      {"lhs", line.lhs},
                      {"rhs", line.rhs},
                      {"holds", line.holds}});
    }
    report["checks"] = rows;
    const fs::path p = fs::path(cfg.out_dir) / "oracle_check.json";
    std::ofstream f(p, std::ios::binary);
    f << report.dump(2) << '\n';
    std::cout << "report: " << p.string() << '\n';
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polar-code soft covering and coordination simulator"};
  app.require_subcommand(1);

  CommonOptions profile_opts, sets_opts, res_opts, emp_opts, strong_opts,
      oracle_opts;

  CLI::App* profile_cmd =
      app.add_subcommand("profile", "compute polarization profiles");
  add_common(profile_cmd, profile_opts);
  CLI::App* sets_cmd =
      app.add_subcommand("sets", "compute profiles and index sets");
  add_common(sets_cmd, sets_opts);
  CLI::App* res_cmd =
      app.add_subcommand("resolvability", "run the channel resolvability scheme");
  add_common(res_cmd, res_opts);
  CLI::App* emp_cmd =
      app.add_subcommand("empirical", "run the empirical coordination scheme");
  add_common(emp_cmd, emp_opts);
  CLI::App* strong_cmd =
      app.add_subcommand("strong", "run the strong coordination scheme");
  add_common(strong_cmd, strong_opts);
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle-check", "verify small-instance identities by enumeration");
  add_common(oracle_cmd, oracle_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (profile_cmd->parsed()) return run_profile(profile_opts, false);
    if (sets_cmd->parsed()) return run_profile(sets_opts, true);
    if (res_cmd->parsed()) {
      return run_scheme(res_opts, schemes::SchemeKind::Resolvability);
    }
    if (emp_cmd->parsed()) {
      return run_scheme(emp_opts, schemes::SchemeKind::Empirical);
    }
    if (strong_cmd->parsed()) {
      return run_scheme(strong_opts, schemes::SchemeKind::Strong);
    }
    if (oracle_cmd->parsed()) return run_oracle_check(oracle_opts);
  } catch (const BudgetError& e) {
    std::cerr << "budget error: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
