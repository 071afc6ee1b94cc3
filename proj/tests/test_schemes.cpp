#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "polarcov/schemes.hpp"
#include "scheme_fixtures.hpp"
#include "test_support.hpp"

using namespace polarcov;
using field::SymbolVector;
using prob::JointPmf;
using schemes::Dmc;

TEST_CASE("channel validation and degenerate channels") {
  CHECK_THROWS_AS(Dmc(2, 2, {0.5, 0.6, 0.5, 0.5}), ValidationError);
  CHECK_THROWS_AS(Dmc(2, 2, {1.0, 0.0}), DimensionError);

  Rng rng(3);
  const auto x = test_support::random_vector(64, 2, rng);
  const auto y_id = schemes::dmc_transmit(x, Dmc::identity(2), rng);
  CHECK(y_id.values().size() == 64);
  for (std::size_t i = 0; i < 64; ++i) CHECK(y_id[i] == x[i]);

  const auto y0 = schemes::dmc_transmit(x, Dmc::binary_symmetric(0.0), rng);
  for (std::size_t i = 0; i < 64; ++i) CHECK(y0[i] == x[i]);
  const auto y1 = schemes::dmc_transmit(x, Dmc::binary_symmetric(1.0), rng);
  for (std::size_t i = 0; i < 64; ++i) CHECK(y1[i] == 1 - x[i]);
}

TEST_CASE("bsc empirical flip rate concentrates") {
  Rng rng(5);
  const std::size_t len = 100000;
  const auto x = test_support::random_vector(len, 2, rng);
  const auto y = schemes::dmc_transmit(x, Dmc::binary_symmetric(0.3), rng);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < len; ++i) flips += (x[i] != y[i]);
  const double rate = static_cast<double>(flips) / static_cast<double>(len);
  CHECK(std::abs(rate - 0.3) < 0.01);
}

TEST_CASE("channel from joint handles zero-mass inputs") {
  const JointPmf joint({2, 2}, {0.5, 0.5, 0.0, 0.0});  // X = 0 always
  const Dmc ch = Dmc::from_joint(joint, 0, 1);
  CHECK(ch.row(0)[0] == doctest::Approx(0.5));
  CHECK(ch.row(1)[0] == doctest::Approx(0.5));  // uniform fallback row
}

TEST_CASE("resolvability chain recycles frozen content across blocks") {
  const auto ctx =
      scheme_fixtures::resolvability_ctx(scheme_fixtures::source_times_bsc(0.3, 0.2), 3);
  const auto tr = schemes::run_resolvability(ctx, 4, 2024);
  REQUIRE(tr.blocks.size() == 4);
  CHECK(tr.cbar.size() == ctx.very_high_given_out.size());
  for (const auto& block : tr.blocks) {
    for (std::size_t t = 0; t < ctx.very_high_given_out.size(); ++t) {
      CHECK(block.u[ctx.very_high_given_out[t]] == tr.cbar[t]);
    }
    CHECK(block.fresh.size() == ctx.fresh_set.size());
    REQUIRE(block.y.has_value());
    // the transmitted word is the inverse transform of the sampled one
    CHECK(field::polar_transform(block.x) == block.u);
  }
  CHECK(tr.ledger.shared_recycled == tr.cbar.size());
  CHECK(tr.ledger.shared_fresh == 4 * ctx.fresh_set.size());
}

TEST_CASE("argmax variant skips randomness on negligible positions") {
  const auto joint = scheme_fixtures::source_times_bsc(0.3, 0.2);
  const auto profile =
      polarize::exact_profile(schemes::resolvability_source(joint), 3);
  const auto ctx =
      schemes::make_resolvability_context(joint, 3, profile, 0.4, 0.4, true);
  const int k = 3;
  const auto tr = schemes::run_resolvability(ctx, k, 313);
  const std::size_t N = 8;
  const std::size_t randomized =
      ctx.high.size() - ctx.very_high.size();  // high minus frozen very-high
  CHECK(tr.ledger.local_conditional ==
        static_cast<std::uint64_t>(k) * randomized);
  // argmax positions still replay through the trace
  for (const auto& block : tr.blocks) {
    CHECK(block.u.size() == N);
    CHECK(field::polar_transform(block.x) == block.u);
  }
}

TEST_CASE("identical seeds reproduce transcripts") {
  const auto ctx =
      scheme_fixtures::resolvability_ctx(scheme_fixtures::source_times_bsc(0.3, 0.2), 2);
  const auto a = schemes::run_resolvability(ctx, 3, 99);
  const auto b = schemes::run_resolvability(ctx, 3, 99);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("empirical encode/decode round trip") {
  const auto ctx = scheme_fixtures::empirical_ctx(scheme_fixtures::dsbs(0.11), 2);
  Rng rng(17);
  const prob::Pmf px = ctx.joint.marginal_pmf(0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::uint16_t> xs(4);
    for (auto& s : xs) {
      s = static_cast<std::uint16_t>(rng.sample_weights(px.values()));
    }
    const SymbolVector x(xs, 2);
    std::vector<std::uint16_t> c1(ctx.very_high_given_side.size());
    for (auto& s : c1) s = static_cast<std::uint16_t>(rng.uniform_below(2));

    const auto enc = schemes::empirical_encode(ctx, x, c1, rng);
    CHECK(enc.message.size() == ctx.message_set.size());
    const auto y = schemes::empirical_decode(ctx, enc.message, c1, enc.trace);
    CHECK(y == field::polar_inverse(enc.u));
  }
}

TEST_CASE("empirical with a noiseless target copies the source") {
  // Y = X: conditioned entropies vanish, the recycled set is empty, and the
  // decoder reproduces the observed actions exactly.
  const JointPmf joint({2, 2}, {0.5, 0.0, 0.0, 0.5});
  const auto ctx = scheme_fixtures::empirical_ctx(joint, 2);
  CHECK(ctx.very_high_given_side.empty());
  Rng rng(23);
  const SymbolVector x({0, 1, 1, 0}, 2);
  const auto enc = schemes::empirical_encode(ctx, x, {}, rng);
  const auto y = schemes::empirical_decode(ctx, enc.message, {}, enc.trace);
  CHECK(y == x);
}

TEST_CASE("empirical decode validates shapes") {
  const auto ctx = scheme_fixtures::empirical_ctx(scheme_fixtures::dsbs(0.11), 2);
  Rng rng(29);
  const SymbolVector x({0, 1, 0, 1}, 2);
  std::vector<std::uint16_t> c1(ctx.very_high_given_side.size(), 0);
  const auto enc = schemes::empirical_encode(ctx, x, c1, rng);
  std::vector<std::uint16_t> short_msg(enc.message.begin(),
                                       enc.message.end());
  if (!short_msg.empty()) {
    short_msg.pop_back();
    CHECK_THROWS_AS(
        schemes::empirical_decode(ctx, short_msg, c1, enc.trace), ReplayError);
  }
  std::vector<std::uint16_t> bad_trace = enc.trace;
  bad_trace.push_back(0);
  CHECK_THROWS_AS(schemes::empirical_decode(ctx, enc.message, c1, bad_trace),
                  ReplayError);
}

TEST_CASE("strong encode/decode reconstructs the middle block exactly") {
  const auto ctx = scheme_fixtures::strong_ctx(scheme_fixtures::markov_xvy(), 2);
  CHECK(ctx.f.f1.size() + ctx.f.f2.size() + ctx.f.f3.size() +
            ctx.f.f4.size() ==
        4);
  Rng rng(31);
  const prob::Pmf px = ctx.joint.marginal_pmf(0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint16_t> xs(4);
    for (auto& s : xs) {
      s = static_cast<std::uint16_t>(rng.sample_weights(px.values()));
    }
    const SymbolVector x(xs, 2);
    std::vector<std::uint16_t> cbar(ctx.f.f2.size()), c_i(ctx.f.f3.size());
    for (auto& s : cbar) s = static_cast<std::uint16_t>(rng.uniform_below(5));
    for (auto& s : c_i) s = static_cast<std::uint16_t>(rng.uniform_below(5));

    const auto enc = schemes::strong_encode(ctx, x, cbar, c_i, rng);
    CHECK(enc.message.size() == ctx.f.f4.size());
    Rng local(1000 + static_cast<std::uint64_t>(trial));
    const auto dec =
        schemes::strong_decode(ctx, enc.message, cbar, c_i, enc.trace, local);
    CHECK(dec.v == field::polar_inverse(enc.u));
    CHECK(dec.y.size() == 4);
    CHECK(dec.local_trace.size() == 4);
  }
}

TEST_CASE("deterministic output channel makes simulation a function of v") {
  // y = v mod 2 exactly: the output's side-conditioned entropies vanish, no
  // position is locally uniform, and decoding twice with different local
  // randomness yields the same actions.
  const double qx[] = {0.5, 0.5};
  const double qvx[2][5] = {{0.30, 0.25, 0.20, 0.15, 0.10},
                            {0.08, 0.12, 0.20, 0.25, 0.35}};
  std::vector<double> p(2 * 5 * 2, 0.0);
  for (int x = 0; x < 2; ++x) {
    for (int v = 0; v < 5; ++v) {
      p[(x * 5 + v) * 2 + (v % 2)] = qx[x] * qvx[x][v];
    }
  }
  const JointPmf joint({2, 5, 2}, p);
  const auto ctx = scheme_fixtures::strong_ctx(joint, 2);
  CHECK(ctx.local_uniform_set.empty());

  Rng rng(41);
  const SymbolVector x({0, 1, 1, 0}, 2);
  std::vector<std::uint16_t> cbar(ctx.f.f2.size()), c_i(ctx.f.f3.size());
  for (auto& s : cbar) s = static_cast<std::uint16_t>(rng.uniform_below(5));
  for (auto& s : c_i) s = static_cast<std::uint16_t>(rng.uniform_below(5));
  const auto enc = schemes::strong_encode(ctx, x, cbar, c_i, rng);

  Rng local_a(1), local_b(2);
  const auto da =
      schemes::strong_decode(ctx, enc.message, cbar, c_i, enc.trace, local_a);
  const auto db =
      schemes::strong_decode(ctx, enc.message, cbar, c_i, enc.trace, local_b);
  CHECK(da.y == db.y);
  for (std::size_t i = 0; i < 4; ++i) CHECK(da.y[i] == da.v[i] % 2);
}

TEST_CASE("strong chain transcript structure") {
  const auto ctx = scheme_fixtures::strong_ctx(scheme_fixtures::markov_xvy(), 2);
  const auto tr = schemes::run_strong(ctx, 3, 555);
  REQUIRE(tr.blocks.size() == 3);
  CHECK(tr.cbar.size() == ctx.f.f2.size());
  for (const auto& block : tr.blocks) {
    CHECK(block.message.size() == ctx.f.f4.size());
    CHECK(block.fresh.size() == ctx.f.f3.size());
    REQUIRE(block.v.has_value());
    REQUIRE(block.y.has_value());
    for (std::size_t t = 0; t < ctx.f.f2.size(); ++t) {
      CHECK(block.u[ctx.f.f2[t]] == tr.cbar[t]);
    }
  }
  CHECK(tr.ledger.local_uniform == 3 * ctx.local_uniform_set.size());
}

TEST_CASE("rate report equals the set-cardinality formulas") {
  const int k = 4;
  {
    const auto ctx = scheme_fixtures::resolvability_ctx(
        scheme_fixtures::source_times_bsc(0.3, 0.2), 3);
    const auto report = schemes::rate_report(ctx, k);
    const double N = 8.0;
    const double recycled = static_cast<double>(ctx.very_high_given_out.size());
    const double fresh = static_cast<double>(ctx.fresh_set.size());
    CHECK(report.row("randomness").fraction ==
          doctest::Approx((recycled + k * fresh) / (k * N)).epsilon(1e-15));
    CHECK(report.row("randomness_k_inf").fraction ==
          doctest::Approx(fresh / N).epsilon(1e-15));
  }
  {
    const auto ctx = scheme_fixtures::empirical_ctx(scheme_fixtures::dsbs(0.11), 3);
    const auto report = schemes::rate_report(ctx, k);
    const double N = 8.0;
    CHECK(report.row("message").fraction ==
          doctest::Approx(static_cast<double>(ctx.message_set.size()) / N)
              .epsilon(1e-15));
    CHECK(report.row("common_randomness").fraction ==
          doctest::Approx(
              static_cast<double>(ctx.very_high_given_side.size()) / (k * N))
              .epsilon(1e-15));
  }
  {
    const auto ctx = scheme_fixtures::strong_ctx(scheme_fixtures::markov_xvy(), 2);
    const auto report = schemes::rate_report(ctx, k);
    const double N = 4.0;
    CHECK(report.row("communication").fraction ==
          doctest::Approx(static_cast<double>(ctx.f.f4.size()) / N)
              .epsilon(1e-15));
    CHECK(report.row("common_randomness").fraction ==
          doctest::Approx((static_cast<double>(ctx.f.f2.size()) +
                           k * static_cast<double>(ctx.f.f3.size())) /
                          (k * N))
              .epsilon(1e-15));
    CHECK(report.row("local_randomness").fraction ==
          doctest::Approx(
              static_cast<double>(ctx.local_uniform_set.size()) / N)
              .epsilon(1e-15));
    // communication + common randomness collapse at large k
    CHECK(report.row("sum_k_inf").fraction ==
          doctest::Approx((static_cast<double>(ctx.f.f4.size()) +
                           static_cast<double>(ctx.f.f3.size())) /
                          N)
              .epsilon(1e-15));
  }
}

TEST_CASE("transcripts serialize with replayable content") {
  const auto ctx = scheme_fixtures::empirical_ctx(scheme_fixtures::dsbs(0.11), 2);
  const auto tr = schemes::run_empirical(ctx, 2, 77);
  const auto doc = nlohmann::json::parse(tr.to_json());
  CHECK(doc.at("scheme") == "empirical");
  CHECK(doc.at("blocks").size() == 2);
  CHECK(doc.at("blocks")[0].contains("message"));
  CHECK(doc.at("blocks")[0].contains("trace"));

  // decoding from the serialized pieces reproduces the recorded actions
  const auto& b0 = doc.at("blocks")[0];
  const std::vector<std::uint16_t> msg = b0.at("message");
  const std::vector<std::uint16_t> trace = b0.at("trace");
  const std::vector<std::uint16_t> cbar = doc.at("cbar");
  const auto y = schemes::empirical_decode(ctx, msg, cbar, trace);
  const std::vector<std::uint16_t> y_rec = b0.at("y");
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == y_rec[i]);
}
