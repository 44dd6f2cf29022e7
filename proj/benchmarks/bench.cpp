#include <benchmark/benchmark.h>

#include "patriot/netsim.hpp"
#include "patriot/rng.hpp"
#include "patriot/runner.hpp"
#include "patriot/sim.hpp"

using namespace patriot;

static void BM_PrngNextU64(benchmark::State& state) {
    RngStream rng = RngStream::derived(1, "bench");
    for (auto _ : state) {
        benchmark::DoNotOptimize(rng.next_u64());
    }
}
BENCHMARK(BM_PrngNextU64);

static void BM_PrngGaussian(benchmark::State& state) {
    RngStream rng = RngStream::derived(1, "bench");
    for (auto _ : state) {
        benchmark::DoNotOptimize(rng.gaussian(0.0, 1.0));
    }
}
BENCHMARK(BM_PrngGaussian);

static void BM_SchedulerChurn(benchmark::State& state) {
    for (auto _ : state) {
        SimLoop loop;
        for (int i = 0; i < state.range(0); ++i) {
            loop.schedule(i % 100, [] {});
        }
        loop.run_until(100);
    }
}
BENCHMARK(BM_SchedulerChurn)->Arg(1000)->Arg(10000);

static void BM_NetworkSend(benchmark::State& state) {
    TopologySpec t;
    t.nodes = {{"a", NodeKind::Device},
               {"r", NodeKind::Router},
               {"b", NodeKind::Device}};
    t.links = {{"a", "r", 5, 0.0, std::nullopt, true},
               {"r", "b", 5, 0.0, std::nullopt, true}};
    SimLoop loop;
    CollectorLog log(1, "h");
    Network net(loop, log, RngStream::derived(1, "net"), t);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.send(MessageEnvelope::make("a", "b", "x", loop.now())));
        loop.run_until(loop.now() + 20);
    }
}
BENCHMARK(BM_NetworkSend);

static void BM_Percentile(benchmark::State& state) {
    RngStream rng = RngStream::derived(2, "pct");
    std::vector<double> samples;
    for (int i = 0; i < state.range(0); ++i) samples.push_back(rng.uniform());
    for (auto _ : state) {
        benchmark::DoNotOptimize(percentile(samples, 99));
    }
}
BENCHMARK(BM_Percentile)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
