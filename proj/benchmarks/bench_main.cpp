#include <benchmark/benchmark.h>

#include <cmath>

#include "rhoest/blocks.hpp"
#include "rhoest/families.hpp"
#include "rhoest/hmm.hpp"
#include "rhoest/metrics.hpp"
#include "rhoest/rho.hpp"
#include "rhoest/rng.hpp"
#include "rhoest/simulate.hpp"

using namespace rhoest;

namespace {

std::vector<double> simplex(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (auto& v : p) {
    v = -std::log(rng.uniform01());
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

void BM_hellinger2_discrete(benchmark::State& state) {
  auto space = SampleSpace::discrete({0, 1, 2, 3, 4, 5, 6, 7});
  Rng rng(1, 1);
  auto p = categorical_candidate(space, simplex(rng, 8), "p");
  auto q = categorical_candidate(space, simplex(rng, 8), "q");
  for (auto _ : state) benchmark::DoNotOptimize(hellinger2(p, q));
}
BENCHMARK(BM_hellinger2_discrete);

void BM_hellinger2_gaussian_quadrature(benchmark::State& state) {
  EmissionSpec a{"gaussian", {0.0, 1.0}, {}};
  EmissionSpec b{"gaussian", {1.0, 0.7}, {}};
  auto space = space_for_emissions({a, b});
  auto pa = make_emission_candidate(a, space, "a");
  auto pb = make_emission_candidate(b, space, "b");
  for (auto _ : state) benchmark::DoNotOptimize(hellinger2(pa, pb));
}
BENCHMARK(BM_hellinger2_gaussian_quadrature);

void BM_pair_scoring(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  auto space = SampleSpace::discrete({0, 1, 2, 3});
  Rng rng(2, 1);
  std::vector<DensityCandidate> cands;
  for (std::size_t i = 0; i < m; ++i)
    cands.push_back(categorical_candidate(space, simplex(rng, 4),
                                          std::to_string(i)));
  FiniteModel model(space, std::move(cands));
  std::vector<double> data(1000);
  for (auto& x : data) x = static_cast<double>(rng.discrete(simplex(rng, 4)));
  Sample sample(space, data);
  for (auto _ : state)
    benchmark::DoNotOptimize(rho_estimate(sample, model, kRhoSlack, 1));
  state.SetComplexityN(static_cast<long>(m));
}
BENCHMARK(BM_pair_scoring)->Arg(16)->Arg(64)->Arg(256)->Complexity();

void BM_forward_recursion(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  std::vector<double> atoms{0.0, 1.0, 2.0};
  HmmParams params(SimplexWeights({0.3, 0.7}),
                   TransitionMatrix({{0.8, 0.2}, {0.4, 0.6}}),
                   {{"categorical", {0.5, 0.3, 0.2}, atoms},
                    {"categorical", {0.1, 0.3, 0.6}, atoms}});
  auto base = SampleSpace::discrete(atoms);
  auto cand = product_chain_density(params, L, base, "c");
  std::vector<double> x(L, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(cand.log_density(x));
}
BENCHMARK(BM_forward_recursion)->Arg(2)->Arg(4)->Arg(8);

void BM_simulate_markov(benchmark::State& state) {
  TransitionMatrix q({{0.9, 0.1}, {0.2, 0.8}});
  SimplexWeights pi({2.0 / 3.0, 1.0 / 3.0});
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_markov(q, pi, 10000, 7, 1));
}
BENCHMARK(BM_simulate_markov);

void BM_estimate_with_spacing(benchmark::State& state) {
  auto space = SampleSpace::discrete({0, 1, 2, 3});
  Rng rng(3, 1);
  std::vector<DensityCandidate> cands;
  for (int i = 0; i < 32; ++i)
    cands.push_back(categorical_candidate(space, simplex(rng, 4),
                                          std::to_string(i)));
  FiniteModel model(space, std::move(cands));
  std::vector<double> data(2000);
  for (auto& x : data) x = static_cast<double>(rng.discrete(simplex(rng, 4)));
  Sample sample(space, data);
  HellingerCache cache(model.candidates());
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_with_spacing(sample, model, 8, 1.0, 1, &cache));
}
BENCHMARK(BM_estimate_with_spacing);

}  // namespace

BENCHMARK_MAIN();
