#include <benchmark/benchmark.h>

#include <optional>

#include "polarcov/field.hpp"
#include "polarcov/polarize.hpp"
#include "polarcov/prob.hpp"
#include "polarcov/schemes.hpp"
#include "polarcov/scsample.hpp"

using namespace polarcov;

namespace {

field::SymbolVector random_word(std::size_t len, std::uint16_t q, Rng& rng) {
  std::vector<std::uint16_t> v(len);
  for (auto& s : v) s = static_cast<std::uint16_t>(rng.uniform_below(q));
  return field::SymbolVector(std::move(v), q);
}

void BM_PolarTransform(benchmark::State& state) {
  const auto q = static_cast<std::uint16_t>(state.range(1));
  Rng rng(1);
  auto x = random_word(static_cast<std::size_t>(state.range(0)), q, rng);
  for (auto _ : state) {
    field::polar_transform_inplace(x.raw(), q);
    benchmark::DoNotOptimize(x.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolarTransform)->Args({1024, 2})->Args({1024, 3})->Args({4096, 2});

void BM_ScSamplePass(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const std::size_t N = std::size_t{1} << n;
  const prob::JointPmf joint({2}, {0.89, 0.11});
  const auto plan = sc::FrozenPlan::all(N, sc::Rule::SampleNoSide);
  Rng rng(2);
  for (auto _ : state) {
    auto path = sc::sc_sample(joint, 0, std::nullopt, plan, rng);
    benchmark::DoNotOptimize(path.u.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(N));
}
BENCHMARK(BM_ScSamplePass)->Arg(6)->Arg(8)->Arg(10);

void BM_ExactProfile(benchmark::State& state) {
  const prob::JointPmf joint({2, 2}, {0.56, 0.14, 0.06, 0.24});
  const polarize::SourceSpec spec{joint, 0, {{1}}, false};
  for (auto _ : state) {
    auto prof = polarize::exact_profile(spec, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(prof.h_uncond.data());
  }
}
BENCHMARK(BM_ExactProfile)->Arg(2)->Arg(3);

void BM_McProfile(benchmark::State& state) {
  const prob::JointPmf joint({2, 2}, {0.56, 0.14, 0.06, 0.24});
  const polarize::SourceSpec spec{joint, 0, {{1}}, false};
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto prof = polarize::mc_profile(spec, n, 512, 7);
    benchmark::DoNotOptimize(prof.h_uncond.data());
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_McProfile)->Arg(6)->Arg(8);

void BM_EmpiricalChain(benchmark::State& state) {
  const prob::JointPmf joint({2, 2}, {0.445, 0.055, 0.055, 0.445});
  const auto profile =
      polarize::mc_profile(schemes::empirical_source(joint),
                           static_cast<int>(state.range(0)), 4000, 3);
  const auto ctx = schemes::make_empirical_context(
      joint, static_cast<int>(state.range(0)), profile, 0.2, 0.2);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto tr = schemes::run_empirical(ctx, 4, ++seed);
    benchmark::DoNotOptimize(tr.blocks.data());
  }
}
BENCHMARK(BM_EmpiricalChain)->Arg(6)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
