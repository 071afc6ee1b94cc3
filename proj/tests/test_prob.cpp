#include <doctest.h>

#include <cmath>

#include "polarcov/prob.hpp"
#include "test_support.hpp"

using namespace polarcov;
using prob::JointPmf;
using prob::Pmf;

TEST_CASE("pmf validation") {
  CHECK_THROWS_AS(Pmf({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(Pmf({-0.1, 1.1}), ValidationError);
  CHECK_NOTHROW(Pmf({0.25, 0.75}));
}

TEST_CASE("entropy basics") {
  CHECK(prob::entropy(Pmf({0.5, 0.5})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prob::entropy(Pmf({1.0, 0.0})) == doctest::Approx(0.0));
  // direct formula: -0.11 log2 0.11 - 0.89 log2 0.89
  const double expect = -0.11 * std::log2(0.11) - 0.89 * std::log2(0.89);
  CHECK(prob::entropy(Pmf({0.11, 0.89})) == doctest::Approx(expect));
  CHECK(prob::entropy(Pmf({0.11, 0.89})) == doctest::Approx(0.49992).epsilon(1e-4));
}

TEST_CASE("kl divergence and the infinity convention") {
  const Pmf p({0.5, 0.5});
  CHECK(prob::kl_divergence(p, p) == 0.0);
  CHECK(std::isinf(prob::kl_divergence(p, Pmf({1.0, 0.0}))));
  // 0.5 log2(0.5/0.25) + 0.5 log2(0.5/0.75)
  const double expect = 0.5 + 0.5 * std::log2(2.0 / 3.0);
  CHECK(prob::kl_divergence(p, Pmf({0.25, 0.75})) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(prob::kl_divergence(p, Pmf({0.25, 0.75})) ==
        doctest::Approx(0.20752).epsilon(1e-5));
  CHECK_THROWS_AS(prob::kl_divergence(p, Pmf({1.0})), DimensionError);
}

TEST_CASE("variational distance is unhalved") {
  CHECK(prob::variational_distance(Pmf({1.0, 0.0}), Pmf({0.0, 1.0})) == 2.0);
  CHECK(prob::variational_distance(Pmf({0.75, 0.25}), Pmf({0.5, 0.5})) ==
        doctest::Approx(0.5));
  CHECK(prob::variational_distance(Pmf({0.3, 0.7}), Pmf({0.3, 0.7})) == 0.0);
}

TEST_CASE("pinsker consistency on random pairs") {
  Rng rng(23);
  for (int t = 0; t < 200; ++t) {
    const Pmf p = test_support::random_pmf(4, rng);
    const Pmf q = test_support::random_pmf(4, rng);
    const double v = prob::variational_distance(p, q);
    CHECK(v * v <= prob::kTwoLn2 * prob::kl_divergence(p, q) + 1e-12);
  }
}

TEST_CASE("joint marginals and mutual information") {
  const JointPmf indep = JointPmf::product(Pmf({0.3, 0.7}), Pmf({0.6, 0.4}));
  const std::size_t a[] = {0}, b[] = {1};
  CHECK(prob::mutual_information(indep, a, b) == doctest::Approx(0.0));

  const JointPmf same({2, 2}, {0.5, 0.0, 0.0, 0.5});
  CHECK(prob::mutual_information(same, a, b) == doctest::Approx(1.0));

  // doubly symmetric binary source, crossover 0.11
  const double c = 0.11;
  const JointPmf dsbs({2, 2}, {(1 - c) / 2, c / 2, c / 2, (1 - c) / 2});
  const double h2 = -c * std::log2(c) - (1 - c) * std::log2(1 - c);
  CHECK(prob::mutual_information(dsbs, a, b) ==
        doctest::Approx(1.0 - h2).epsilon(1e-12));
  CHECK(prob::mutual_information(dsbs, a, b) ==
        doctest::Approx(0.50008).epsilon(1e-4));
}

TEST_CASE("kl chain rule on random joints") {
  Rng rng(29);
  for (int t = 0; t < 100; ++t) {
    const JointPmf p = test_support::random_joint({3, 4}, rng);
    const JointPmf q = test_support::random_joint({3, 4}, rng);
    const double joint_kl = prob::kl_divergence(p, q);
    const Pmf px = p.marginal_pmf(0), qx = q.marginal_pmf(0);
    double expect = prob::kl_divergence(px, qx);
    for (std::size_t x = 0; x < 3; ++x) {
      double inner = 0.0;
      for (std::size_t y = 0; y < 4; ++y) {
        const std::size_t xy[] = {x, y};
        const double pc = p.at(xy) / px[x];
        const double qc = q.at(xy) / qx[x];
        if (pc > 0.0) inner += pc * std::log2(pc / qc);
      }
      expect += px[x] * inner;
    }
    CHECK(joint_kl == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("joint type histogram") {
  using field::SymbolVector;
  const auto t = prob::joint_type(SymbolVector({0, 1}, 2),
                                  SymbolVector({1, 1}, 2));
  CHECK(t.frequency(0, 1) == doctest::Approx(0.5));
  CHECK(t.frequency(1, 1) == doctest::Approx(0.5));
  CHECK(t.frequency(0, 0) == 0.0);
  CHECK(t.frequency(1, 0) == 0.0);

  const auto t2 = prob::joint_type(SymbolVector({0, 0, 0, 0}, 2),
                                   SymbolVector({0, 0, 0, 0}, 2));
  CHECK(t2.frequency(0, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(prob::joint_type(SymbolVector({0, 1}, 2),
                                   SymbolVector({0, 1, 0}, 2)),
                  DimensionError);
}

TEST_CASE("type counts are integers over N and sum to one") {
  Rng rng(31);
  prob::TypeHistogram acc(3, 2);
  for (int block = 0; block < 5; ++block) {
    acc.add(test_support::random_vector(16, 3, rng),
            test_support::random_vector(16, 2, rng));
  }
  double sum = 0.0;
  for (std::size_t x = 0; x < 3; ++x) {
    for (std::size_t y = 0; y < 2; ++y) {
      const double f = acc.frequency(x, y);
      sum += f;
      CHECK(f * static_cast<double>(acc.total()) ==
            doctest::Approx(static_cast<double>(acc.count(x, y))));
    }
  }
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("concatenated type equals the average of per-block types") {
  Rng rng(37);
  const int k = 4;
  prob::TypeHistogram merged(2, 2);
  std::vector<prob::TypeHistogram> blocks;
  for (int b = 0; b < k; ++b) {
    auto x = test_support::random_vector(8, 2, rng);
    auto y = test_support::random_vector(8, 2, rng);
    blocks.push_back(prob::joint_type(x, y));
    merged.add(x, y);
  }
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t y = 0; y < 2; ++y) {
      double avg = 0.0;
      for (const auto& b : blocks) avg += b.frequency(x, y);
      avg /= k;
      CHECK(merged.frequency(x, y) == doctest::Approx(avg).epsilon(1e-12));
    }
  }
}

TEST_CASE("divergence bound report on equal distributions") {
  const Pmf p({0.4, 0.6});
  const auto report = prob::divergence_bounds(p, p, &p);
  CHECK(report.all_hold());
  for (const auto& row : report.rows) {
    if (row.applicable) CHECK(row.lhs == doctest::Approx(0.0));
  }
}

TEST_CASE("independence identity is exact") {
  Rng rng(41);
  for (int t = 0; t < 50; ++t) {
    const JointPmf j = test_support::random_joint({2, 3, 2}, rng);
    const Pmf p = test_support::random_pmf(3, rng);
    const Pmf q = test_support::random_pmf(3, rng);
    const auto report = prob::divergence_bounds(p, q, nullptr, &j);
    bool found = false;
    for (const auto& row : report.rows) {
      if (row.name == "independence-identity") {
        found = true;
        CHECK(row.applicable);
        CHECK(std::abs(row.lhs - row.rhs) <= 1e-10);
      }
    }
    CHECK(found);
  }
  // product joint: both sides exactly zero
  const JointPmf indep = JointPmf::product(Pmf({0.3, 0.7}), Pmf({0.2, 0.8}));
  const Pmf p({0.5, 0.5});
  const auto report = prob::divergence_bounds(p, p, nullptr, &indep);
  for (const auto& row : report.rows) {
    if (row.name == "independence-identity") {
      CHECK(row.lhs == doctest::Approx(0.0));
      CHECK(row.rhs == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("all four relations hold on random triples") {
  Rng rng(43);
  int entropy_diff_checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const Pmf p = test_support::random_pmf(3, rng);
    const Pmf q = test_support::random_pmf(3, rng);
    const Pmf r = test_support::random_pmf(3, rng);
    const auto report = prob::divergence_bounds(p, q, &r);
    CHECK(report.all_hold());
    for (const auto& row : report.rows) {
      if (row.name == "entropy-difference" && row.applicable) {
        ++entropy_diff_checked;
      }
    }
  }
  // the small-divergence region must actually be exercised
  CHECK(entropy_diff_checked > 0);
}

TEST_CASE("zero-mass reference atom reported not applicable") {
  const Pmf p({0.5, 0.5});
  const Pmf q({1.0, 0.0});
  const auto report = prob::divergence_bounds(p, q);
  for (const auto& row : report.rows) {
    if (row.name == "symmetry") CHECK_FALSE(row.applicable);
  }
  CHECK(report.all_hold());
}

TEST_CASE("chi-square survival sanity") {
  // median of chi-square with 1 dof is about 0.455
  CHECK(prob::chi_square_survival(0.455, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-2));
  // P[chi2_1 > 3.84] ~ 0.05
  CHECK(prob::chi_square_survival(3.841, 1.0) ==
        doctest::Approx(0.05).epsilon(1e-2));
  // P[chi2_10 > 18.31] ~ 0.05
  CHECK(prob::chi_square_survival(18.307, 10.0) ==
        doctest::Approx(0.05).epsilon(1e-2));
  CHECK(prob::chi_square_survival(0.0, 5.0) == 1.0);
}
