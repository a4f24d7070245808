#include <benchmark/benchmark.h>

#include "modfus/colored_noise.hpp"
#include "modfus/rng.hpp"
#include "modfus/signal.hpp"
#include "modfus/synth.hpp"

using namespace modfus;

namespace {

void BM_SynthSignal(benchmark::State& state) {
  SynthSpec spec;
  spec.schemes = {"QAM16"};
  spec.snrs_db = {18.0};
  spec.count_per_scheme_per_snr = 1;
  spec.length = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth_dataset(spec, seed++));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_ColoredNoise(benchmark::State& state) {
  Rng rng(1);
  const auto length = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(colored_noise(length, NoiseColor::Pink, 1.0, rng));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(length) * 16);
}

}  // namespace

BENCHMARK(BM_SynthSignal)->Arg(128)->Arg(1024);
BENCHMARK(BM_ColoredNoise)->Arg(128)->Arg(4096);
