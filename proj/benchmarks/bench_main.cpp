#include <benchmark/benchmark.h>

#include <random>

#include "plexus/learning/learning.hpp"
#include "plexus/sampler/sampler.hpp"
#include "plexus/simnet/fair_share.hpp"
#include "plexus/simnet/traces.hpp"

using namespace plexus;

static void BM_Sample(benchmark::State& state) {
  const Membership m(simnet::generate_profiles(static_cast<std::size_t>(state.range(0)), 1));
  std::uint64_t k = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sampler::sample_with_aggregator(RoundNumber(k++), 13, m));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_MaxMinRates(benchmark::State& state) {
  const auto nodes = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<double> caps(2 * nodes);
  for (auto& c : caps) c = 1e3 + static_cast<double>(rng() % 100000);
  std::vector<simnet::FlowPorts> flows;
  for (std::size_t f = 0; f < 4 * nodes; ++f) {
    const std::size_t a = rng() % nodes, b = (a + 1 + rng() % (nodes - 1)) % nodes;
    flows.push_back({2 * a, 2 * b + 1});
  }
  for (auto _ : state) benchmark::DoNotOptimize(simnet::max_min_rates(flows, caps));
}
BENCHMARK(BM_MaxMinRates)->Arg(16)->Arg(128)->Arg(1024);

static void BM_LocalTrain(benchmark::State& state) {
  learning::SynthParams sp;
  sp.n_samples = 2000;
  const auto data = learning::synth_dataset(sp);
  const learning::ModelSpec spec{state.range(0) == 0 ? learning::ModelFamily::Linear : learning::ModelFamily::Mlp, 32,
                                 10, state.range(0) == 0 ? 0u : 64u};
  const auto model = learning::init_model(spec, 1);
  learning::TrainerConfig tc;
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(learning::local_train(spec, model, data.train, tc, rng));
}
BENCHMARK(BM_LocalTrain)->Arg(0)->Arg(1);
BENCHMARK_MAIN();
