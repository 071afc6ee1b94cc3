#pragma once
// Experiment runner: config ingestion, seeded multi-trial execution, metric
// aggregation, bound audits, and flat-file outputs (CSV + JSON summary).
//
// Reproducibility contract: identical config and master seed produce
// byte-identical CSV, whatever POLARCOV_THREADS says. Wall-clock timestamps
// appear only in the summary.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polarcov/common.hpp"
#include "polarcov/polarize.hpp"
#include "polarcov/prob.hpp"
#include "polarcov/schemes.hpp"

namespace polarcov::bench {

struct Thresholds {
  // Exactly one of the two forms: the finite-length preset 2^(-N^beta)
  // applied to both thresholds, or explicit values.
  std::optional<double> beta;
  std::optional<double> delta_v;
  std::optional<double> delta_h;

  // (delta_v, delta_h) for a given transform order.
  std::pair<double, double> resolve(int n) const;
  std::string describe() const;
};

struct EstimatorConfig {
  std::uint64_t profile_samples = 20000;
  int bootstrap_resamples = 1000;
};

struct ExperimentConfig {
  schemes::SchemeKind scheme = schemes::SchemeKind::Empirical;
  std::optional<prob::JointPmf> target;  // 2 axes, or 3 for strong
  std::vector<int> n_list;
  std::vector<int> k_list;
  Thresholds thresholds;
  int trials = 100;
  std::uint64_t seed = 0;
  EstimatorConfig estimator;
  std::vector<double> epsilons{0.05, 0.1, 0.2};
  std::string out_dir = "out";
  std::size_t profile_budget = polarize::kDefaultExactBudget;
  int save_transcripts = 0;  // per cell, replayed from the trial seeds

  // Parses the JSON document; relative target file paths resolve against
  // base_dir.
  static ExperimentConfig from_json(const std::string& text,
                                    const std::string& base_dir);
  static ExperimentConfig load(const std::string& path);

  // Scheme-specific checks, primality of the polarized alphabets included.
  void validate() const;
};

// Fixed, versioned CSV schema.
std::string csv_header();

struct TrialRow {
  std::string scheme;
  std::size_t N = 0;
  int k = 1;
  std::uint64_t seed = 0;
  double rate_msg = 0.0;
  double rate_shared = 0.0;
  double rate_trace = 0.0;
  double rate_local = 0.0;
  double v_dist = 0.0;          // mean per-block single-letter distance
  double kl = 0.0;              // plug-in KL of the pooled type vs target
  double histogram_dist = 0.0;  // single-letter distance over all kN pairs
};

std::string csv_row(const TrialRow& row);

struct VdistEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t samples = 0;
};

// Plug-in variational distance between an empirical type and the target,
// with a bootstrap percentile interval. Requires at least 1000 samples.
VdistEstimate estimate_vdist(const prob::TypeHistogram& type,
                             const prob::JointPmf& target,
                             int bootstrap_resamples, std::uint64_t seed);

// Per-block histogram concentration budget
// 2 |X||Y| exp(-N eps^2 / (2 |X|^2 |Y|^2)).
double hoeffding_budget(std::size_t block_len, double eps, std::size_t x_size,
                        std::size_t y_size);

struct RunResult {
  std::string csv_path;
  std::string summary_path;
  std::vector<std::string> artifact_paths;
};

// Executes every (n, k) cell of the config, writing metrics.csv,
// summary.json, and the profile/sets artifacts used. Partial outputs are
// removed when a run fails.
RunResult run_experiment(const ExperimentConfig& config);

}  // namespace polarcov::bench
