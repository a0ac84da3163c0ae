#include <random>

#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "relaxcert/certify.hpp"
#include "relaxcert/lrsdp.hpp"
#include "relaxcert/restore.hpp"
#include "relaxcert/solver.hpp"

using namespace relaxcert;

static void BM_OpfSolve(benchmark::State& state) {
  const auto c = fixtures::random_case(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver::solve_opf_relaxation(c.net, c.cost));
  }
  state.counters["buses"] = static_cast<double>(c.net.num_buses());
}
BENCHMARK(BM_OpfSolve)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_RestorationPath(benchmark::State& state) {
  const auto c = fixtures::random_case(7);
  const auto pts = distflow::relaxed_points(c.net, 16, 7);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(restore::restoration_path(c.net, c.cost, pts[i++ % pts.size()]));
  }
}
BENCHMARK(BM_RestorationPath)->Unit(benchmark::kMicrosecond);

static void BM_RankReduction(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = lrsdp::random_instance(rng, n, 1, 1);
  const auto X0 = lrsdp::PsdPoint::from(g.X0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lrsdp::reduce_rank_path(g.inst, X0));
  }
}
BENCHMARK(BM_RankReduction)->Arg(3)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_TwoBusOracle(benchmark::State& state) {
  const auto c = fixtures::two_bus_case(1000);
  const auto rp = certify::eliminate_opf(c.net, c.cost);
  const double res = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify::brute_force_oracle(rp, res));
  }
}
BENCHMARK(BM_TwoBusOracle)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_Multistart(benchmark::State& state) {
  const auto c = fixtures::two_bus_case(1000);
  const auto rp = certify::eliminate_opf(c.net, c.cost);
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify::multistart_local_search(rp, 20, 0));
  }
}
BENCHMARK(BM_Multistart)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
