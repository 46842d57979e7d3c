#include <benchmark/benchmark.h>

#include <vector>

#include "qsllab/bath.hpp"
#include "qsllab/dephasing.hpp"
#include "qsllab/heom.hpp"
#include "qsllab/qsl.hpp"

using namespace qsllab;

namespace {

const bath::OhmicLikeSpec kStrong{0.2, 50.0, 1.0};

void BM_DecoherenceFactor(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(bath::decoherence_factor(kStrong, 1.0, 0.7).value);
  }
}
BENCHMARK(BM_DecoherenceFactor);

void BM_DecoherenceSamples(benchmark::State& state) {
  const auto grid = dephasing::uniform_grid(0.0, 4.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bath::decoherence_samples(kStrong, 1.0, grid).gamma.back());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecoherenceSamples)->Arg(101)->Arg(1001);

void BM_PulsedLattice(benchmark::State& state) {
  const bath::OhmicLikeSpec spec{0.2, 20.0, 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bath::decoherence_factor_pulsed_lattice(spec, 1.0, static_cast<int>(state.range(0)), 0.05)
            .back()
            .value);
  }
}
BENCHMARK(BM_PulsedLattice)->Arg(20)->Arg(80);

void BM_ClosedQsl(benchmark::State& state) {
  const dephasing::BlochVector plus{1.0, 0.0, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(qsl::qsl_dephasing_closed(kStrong, 1.0, 1.0, plus, 0.5, 1.0).ratio);
  }
}
BENCHMARK(BM_ClosedQsl);

void BM_HeomRhs(benchmark::State& state) {
  heom::HeomConfig c;
  c.K = 4;
  c.L = static_cast<int>(state.range(0));
  const auto s = heom::build_hierarchy(c, heom::product_plus_state());
  for (auto _ : state) {
    benchmark::DoNotOptimize(heom::heom_rhs(s, c).data());
  }
  state.counters["ados"] = static_cast<double>(s.size());
}
BENCHMARK(BM_HeomRhs)->Arg(3)->Arg(6);

void BM_HeomEvolve(benchmark::State& state) {
  heom::HeomConfig c;
  c.K = 2;
  c.L = 3;
  c.t_max = 2.0;
  c.output_interval = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(heom::evolve(c, heom::product_plus_state()).report.steps);
  }
}
BENCHMARK(BM_HeomEvolve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
