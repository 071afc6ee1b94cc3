#include <doctest.h>

#include <cmath>

#include "polarcov/polarize.hpp"
#include "test_support.hpp"

using namespace polarcov;
using polarize::IndexSets;
using polarize::PolarProfile;
using polarize::SourceSpec;
using prob::JointPmf;
using prob::Pmf;

namespace {

double h2(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

SourceSpec bernoulli_source(double p) {
  // single-axis joint: just the marginal of the polarized symbol
  return SourceSpec{JointPmf({2}, {1 - p, p}), 0, {}, false};
}

SourceSpec dsbs_source(double crossover) {
  // (X, Y) doubly symmetric binary; polarize X with side Y
  const double c = crossover;
  return SourceSpec{
      JointPmf({2, 2}, {(1 - c) / 2, c / 2, c / 2, (1 - c) / 2}), 0, {{1}},
      false};
}

}  // namespace

TEST_CASE("uniform source polarizes to all ones at any n") {
  SourceSpec spec{JointPmf({2}, {0.5, 0.5}), 0, {}, false};
  for (int n : {1, 3, 6}) {
    const auto prof = polarize::exact_profile(spec, n);
    for (double h : prof.h_uncond) CHECK(h == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("bernoulli(0.11) profile at n = 1") {
  const auto prof = polarize::exact_profile(bernoulli_source(0.11), 1);
  const double h_first = h2(2 * 0.11 * 0.89);
  const double h_second = 2 * h2(0.11) - h_first;
  CHECK(prof.h_uncond[0] == doctest::Approx(h_first).epsilon(1e-12));
  CHECK(prof.h_uncond[1] == doctest::Approx(h_second).epsilon(1e-12));
}

TEST_CASE("deterministic side pins the conditioned profile to zero") {
  // Y = X exactly; polarize Y given X
  SourceSpec spec{JointPmf({2, 2}, {0.5, 0.0, 0.0, 0.5}), 1, {{0}}, false};
  const auto prof = polarize::exact_profile(spec, 2);
  for (double h : prof.h_cond[0]) CHECK(h == doctest::Approx(0.0));
}

TEST_CASE("profile conservation and dominance on random joints") {
  Rng rng(101);
  for (int trial = 0; trial < 6; ++trial) {
    SourceSpec spec{test_support::random_joint({2, 3}, rng), 0, {{1}}, false};
    const double h_x = prob::entropy(spec.joint.marginal_pmf(0));
    const std::size_t both[] = {0, 1};
    const double h_xy = prob::entropy(spec.joint.marginal(both));
    const double h_x_given_y = h_xy - prob::entropy(spec.joint.marginal_pmf(1));
    for (int n : {1, 2, 3}) {
      const auto prof = polarize::exact_profile(spec, n);
      const double N = std::pow(2.0, n);
      double sum_u = 0.0, sum_c = 0.0;
      for (std::size_t j = 0; j < prof.size(); ++j) {
        sum_u += prof.h_uncond[j];
        sum_c += prof.h_cond[0][j];
        CHECK(prof.h_cond[0][j] <= prof.h_uncond[j] + 1e-9);
      }
      CHECK(sum_u == doctest::Approx(N * h_x).epsilon(1e-9));
      CHECK(sum_c == doctest::Approx(N * h_x_given_y).epsilon(1e-9));
    }
  }
}

TEST_CASE("butterfly DP agrees with definition-level enumeration") {
  Rng rng(103);
  for (int trial = 0; trial < 4; ++trial) {
    SourceSpec spec{test_support::random_joint({2, 2}, rng), 0, {{1}}, false};
    for (int n : {1, 2, 3}) {
      const auto dp = polarize::exact_profile(spec, n);
      const auto enumd = polarize::enumerated_profile(spec, n);
      for (std::size_t j = 0; j < dp.size(); ++j) {
        CHECK(dp.h_uncond[j] == doctest::Approx(enumd.h_uncond[j]).epsilon(1e-10));
        CHECK(dp.h_cond[0][j] ==
              doctest::Approx(enumd.h_cond[0][j]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("three-variable profile with two conditionings") {
  // X -> V -> Y with V ternary; conditioned entropies must nest
  Rng rng(107);
  // build a Markov joint q(x, v, y) = q(x) q(v|x) q(y|v)
  std::vector<double> p(2 * 3 * 2);
  const double qx[] = {0.4, 0.6};
  const double qvx[2][3] = {{0.7, 0.2, 0.1}, {0.1, 0.3, 0.6}};
  const double qyv[3][2] = {{0.9, 0.1}, {0.5, 0.5}, {0.2, 0.8}};
  for (int x = 0; x < 2; ++x)
    for (int v = 0; v < 3; ++v)
      for (int y = 0; y < 2; ++y)
        p[(x * 3 + v) * 2 + y] = qx[x] * qvx[x][v] * qyv[v][y];
  SourceSpec spec{JointPmf({2, 3, 2}, p), 1, {{0}, {0, 2}}, true};
  CHECK_NOTHROW(spec.validate());

  const auto prof = polarize::exact_profile(spec, 2);
  for (std::size_t j = 0; j < prof.size(); ++j) {
    CHECK(prof.h_cond[1][j] <= prof.h_cond[0][j] + 1e-9);
    CHECK(prof.h_cond[0][j] <= prof.h_uncond[j] + 1e-9);
  }
  const auto enumd = polarize::enumerated_profile(spec, 2);
  for (std::size_t j = 0; j < prof.size(); ++j) {
    CHECK(prof.h_cond[1][j] ==
          doctest::Approx(enumd.h_cond[1][j]).epsilon(1e-10));
  }

  // F-partition assembly
  const auto sets = polarize::index_sets(prof, 0.3, 0.3);
  REQUIRE(sets.f.has_value());
  const auto& f = *sets.f;
  CHECK(f.f1.size() + f.f2.size() + f.f3.size() + f.f4.size() == prof.size());
  CHECK(polarize::is_subset(sets.v_cond[1], sets.v_cond[0]));
  CHECK(polarize::is_subset(sets.v_cond[0], sets.h_uncond));
}

TEST_CASE("markov validation rejects non-factoring joints") {
  Rng rng(109);
  SourceSpec spec{test_support::random_joint({2, 3, 2}, rng), 1, {{0}}, true};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("monte carlo profile: zero-variance cases") {
  SourceSpec uniform{JointPmf({2}, {0.5, 0.5}), 0, {}, false};
  const auto prof = polarize::mc_profile(uniform, 5, 200, 7);
  for (std::size_t j = 0; j < prof.size(); ++j) {
    CHECK(prof.h_uncond[j] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(prof.se_uncond[j] == doctest::Approx(0.0));
  }

  SourceSpec point{JointPmf({2}, {1.0, 0.0}), 0, {}, false};
  const auto prof2 = polarize::mc_profile(point, 3, 100, 7);
  for (double h : prof2.h_uncond) CHECK(h == doctest::Approx(0.0));
}

TEST_CASE("monte carlo profile matches exact within three standard errors") {
  const auto spec = bernoulli_source(0.11);
  const auto exact = polarize::exact_profile(spec, 3);
  const auto mc = polarize::mc_profile(spec, 3, 20000, 12345);
  for (std::size_t j = 0; j < exact.size(); ++j) {
    const double tol = std::max(3.0 * mc.se_uncond[j], 1e-9);
    CHECK(std::abs(mc.h_uncond[j] - exact.h_uncond[j]) <= tol);
  }
}

TEST_CASE("monte carlo profile is reproducible and thread-count independent") {
  const auto spec = dsbs_source(0.11);
  const auto a = polarize::mc_profile(spec, 3, 1000, 99);
  const auto b = polarize::mc_profile(spec, 3, 1000, 99);
  CHECK(a.h_uncond == b.h_uncond);
  CHECK(a.h_cond[0] == b.h_cond[0]);
}

TEST_CASE("index set examples") {
  SourceSpec uniform{JointPmf({2}, {0.5, 0.5}), 0, {}, false};
  const auto prof = polarize::exact_profile(uniform, 2);
  const auto sets = polarize::index_sets(prof, 0.1, 0.1);
  CHECK(sets.v_uncond == polarize::IndexSet{0, 1, 2, 3});

  SourceSpec point{JointPmf({2}, {1.0, 0.0}), 0, {}, false};
  const auto prof2 = polarize::exact_profile(point, 2);
  const auto sets2 = polarize::index_sets(prof2, 0.1, 0.1);
  CHECK(sets2.v_uncond.empty());
  CHECK(sets2.h_uncond.empty());

  const auto prof3 = polarize::exact_profile(bernoulli_source(0.11), 1);
  const auto sets3 = polarize::index_sets(prof3, 0.4, 0.4);
  CHECK(sets3.v_uncond == polarize::IndexSet{0});
  CHECK(sets3.h_uncond == polarize::IndexSet{0});
}

TEST_CASE("threshold validation") {
  const auto prof = polarize::exact_profile(bernoulli_source(0.2), 2);
  CHECK_THROWS_AS(polarize::index_sets(prof, 0.6, 0.6), ValidationError);
  CHECK_THROWS_AS(polarize::index_sets(prof, 0.0, 0.1), ValidationError);
  CHECK_THROWS_AS(polarize::index_sets(prof, 1.2, 0.1), ValidationError);
}

TEST_CASE("monotone thresholds") {
  const auto prof = polarize::exact_profile(bernoulli_source(0.3), 3);
  const auto wide = polarize::index_sets(prof, 0.45, 0.45);
  const auto narrow_v = polarize::index_sets(prof, 0.2, 0.45);
  const auto grown_h = polarize::index_sets(prof, 0.2, 0.5);
  CHECK(polarize::is_subset(narrow_v.v_uncond, wide.v_uncond));
  CHECK(polarize::is_subset(grown_h.h_uncond, narrow_v.h_uncond));
}

TEST_CASE("smallest prime at or above") {
  CHECK(polarize::smallest_prime_geq(4) == 5);
  CHECK(polarize::smallest_prime_geq(7) == 7);
  CHECK(polarize::smallest_prime_geq(2 * 2 + 1) == 5);
  CHECK(polarize::smallest_prime_geq(24) == 29);
  CHECK_THROWS_AS(polarize::smallest_prime_geq(1), ValidationError);
}

TEST_CASE("threshold preset") {
  CHECK(polarize::paper_delta(3, 0.25) ==
        doctest::Approx(std::pow(2.0, -std::pow(8.0, 0.25))));
  CHECK_THROWS_AS(polarize::paper_delta(3, 0.5), ValidationError);
  CHECK_THROWS_AS(polarize::paper_delta(3, -0.1), ValidationError);
}

TEST_CASE("profile serialization reloads bit-exactly") {
  Rng rng(113);
  SourceSpec spec{test_support::random_joint({2, 2}, rng), 0, {{1}}, false};
  const auto prof = polarize::exact_profile(spec, 3);
  const auto back = PolarProfile::from_json(prof.to_json());
  CHECK(back.n == prof.n);
  CHECK(back.alphabet == prof.alphabet);
  CHECK(back.h_uncond == prof.h_uncond);  // exact double equality
  CHECK(back.h_cond == prof.h_cond);
  CHECK(back.se_uncond == prof.se_uncond);

  const auto mc = polarize::mc_profile(spec, 3, 500, 5);
  const auto mc_back = PolarProfile::from_json(mc.to_json());
  CHECK(mc_back.h_uncond == mc.h_uncond);
  CHECK(mc_back.se_uncond == mc.se_uncond);
  CHECK(mc_back.samples == mc.samples);
  CHECK(mc_back.seed == mc.seed);
}

TEST_CASE("composite polarized alphabet rejected") {
  SourceSpec spec{JointPmf({4}, {0.25, 0.25, 0.25, 0.25}), 0, {}, false};
  CHECK_THROWS_AS(polarize::exact_profile(spec, 1), ValidationError);
}

TEST_CASE("exhausted budget points at the estimator") {
  Rng rng(127);
  SourceSpec spec{test_support::random_joint({2, 2}, rng), 0, {{1}}, false};
  try {
    polarize::exact_profile(spec, 3, 64);  // deliberately tiny budget
    FAIL("expected a budget error");
  } catch (const BudgetError& e) {
    CHECK(std::string(e.what()).find("mc_profile") != std::string::npos);
  }
}

TEST_CASE("estimator output does not depend on the worker count") {
  const auto spec = dsbs_source(0.11);
  const auto base = polarize::mc_profile(spec, 4, 2000, 31337);
  setenv("POLARCOV_THREADS", "1", 1);
  const auto single = polarize::mc_profile(spec, 4, 2000, 31337);
  unsetenv("POLARCOV_THREADS");
  CHECK(base.h_uncond == single.h_uncond);
  CHECK(base.h_cond[0] == single.h_cond[0]);
  CHECK(base.se_uncond == single.se_uncond);
}
