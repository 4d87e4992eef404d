#include "ttnmf/estimator.hpp"
#include "ttnmf/factor_core.hpp"
#include "ttnmf/init.hpp"
#include "ttnmf/net_model.hpp"
#include "ttnmf/trainer.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace ttnmf;

namespace {

Vector random_row(Eigen::Index n, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

const SyntheticScenario& scenario(int routers, int timestamps) {
  static std::map<std::pair<int, int>, SyntheticScenario> cache;
  auto key = std::make_pair(routers, timestamps);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, generate_synthetic(routers, 8, timestamps, LagSet({1, 2, 12}), 0.05, 1))
             .first;
  return it->second;
}

}  // namespace

// Internet2-sized lag set on a long series.
static void BM_TemporalGraphBuild(benchmark::State& state) {
  const auto t = static_cast<Eigen::Index>(state.range(0));
  const LagSet lags = internet2_lags();
  const Vector omega = random_row(static_cast<Eigen::Index>(lags.size()), 3, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(build_temporal_graph(omega, lags, t));
}
BENCHMARK(BM_TemporalGraphBuild)->Arg(2016)->Arg(4032);

static void BM_TemporalPenaltyGradient(benchmark::State& state) {
  const auto t = static_cast<Eigen::Index>(state.range(0));
  const LagSet lags = internet2_lags();
  const TemporalGraph g =
      build_temporal_graph(random_row(static_cast<Eigen::Index>(lags.size()), 3, 0.2), lags, t);
  const Vector h = random_row(t, 4, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(g.penalty_gradient(h));
}
BENCHMARK(BM_TemporalPenaltyGradient)->Arg(2016)->Arg(4032);

static void BM_SvdInit(benchmark::State& state) {
  const SyntheticScenario& s = scenario(static_cast<int>(state.range(0)), 1000);
  for (auto _ : state) benchmark::DoNotOptimize(init_factors_svd(s.traffic.entries(), 8));
}
BENCHMARK(BM_SvdInit)->Arg(8)->Arg(12);

static void BM_TrainOuterIteration(benchmark::State& state) {
  const SyntheticScenario& s = scenario(static_cast<int>(state.range(0)), 1000);
  TrainConfig c;
  c.rank = 8;
  c.lags = LagSet({1, 2, 12});
  c.q_max = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(s.traffic, s.routing, c));
}
BENCHMARK(BM_TrainOuterIteration)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_EstimateTimestamp(benchmark::State& state) {
  const SyntheticScenario& s = scenario(static_cast<int>(state.range(0)), 1000);
  TrainConfig c;
  c.rank = 8;
  c.lags = LagSet({1, 2, 12});
  c.q_max = 5;
  const auto [model, report] = train(s.traffic, s.routing, c);
  const Vector y = s.routing.entries() * s.traffic.entries().col(500);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_od_flow(y, model, s.routing, EstimatorConfig{}));
}
BENCHMARK(BM_EstimateTimestamp)->Arg(8)->Arg(12);
BENCHMARK_MAIN();
