// Serial reference vs OpenMP kernels. Both modes produce identical results;
// only wall time differs.
#include <array>
#include <random>

#include <benchmark/benchmark.h>

#include "mobstat/betareg.hpp"
#include "mobstat/did.hpp"
#include "mobstat/granger.hpp"
#include "mobstat/ingest.hpp"
#include "mobstat/parallel.hpp"
#include "mobstat/stationarity.hpp"
#include "oracles.hpp"

namespace {

using mobstat::Execution;
namespace t = mobstat::testing;

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::serial : Execution::parallel; }

void BM_DidSampling(benchmark::State& state) {
  const std::array<mobstat::betareg::BetaShape, 4> shapes{{{10.4, 4.1}, {11.2, 3.1}, {5.1, 0.7}, {5.0, 0.5}}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mobstat::did::draw_delta_samples(shapes, 100000, 42, mode(state)));
  }
}
BENCHMARK(BM_DidSampling)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_BetaLogLikelihood(benchmark::State& state) {
  const auto design = t::synthetic_beta_design(3, 200000, {1.0, -0.5, 0.3}, 10.0);
  const auto x = t::with_intercept(design.covariates);
  Eigen::VectorXd theta(4);
  theta << 1.0, -0.5, 0.3, std::log(10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mobstat::betareg::log_likelihood(x, design.response, theta, true, mode(state)));
  }
}
BENCHMARK(BM_BetaLogLikelihood)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_KpssMonteCarlo(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(mobstat::parallel::replicate(
        2000, 1,
        [](std::mt19937_64& rng, std::size_t) {
          return mobstat::stationarity::kpss_test(t::white_noise(rng, 200)).statistic;
        },
        mode(state)));
  }
}
BENCHMARK(BM_KpssMonteCarlo)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_GrangerScan(benchmark::State& state) {
  mobstat::ingest::SynthConfig cfg;
  cfg.seed = 7;
  const auto data = mobstat::ingest::synthesize_dataset(cfg);
  const auto weekly = mobstat::ingest::weekly_aggregate(data.mobility, data.fatalities);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mobstat::granger::granger_scan(weekly, 6, mobstat::granger::DirectionRequest::both, mode(state)));
  }
}
BENCHMARK(BM_GrangerScan)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
