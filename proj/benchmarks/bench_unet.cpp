#include <benchmark/benchmark.h>

#include <vector>

#include "modfus/diffusion.hpp"
#include "modfus/rng.hpp"
#include "modfus/schedule.hpp"
#include "modfus/signal.hpp"
#include "modfus/unet.hpp"

using namespace modfus;

namespace {

std::vector<IQSignal> make_batch(int count, std::size_t length) {
  Rng rng(3);
  std::vector<IQSignal> batch;
  batch.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    batch.push_back(normalize_power(gaussian_like(length, rng)));
  }
  return batch;
}

void BM_UNetForward(benchmark::State& state) {
  const UNetParams<float> params = unet_init<float>(UNetConfig{}, 0);
  const Tensor<float> x =
      to_tensor<float>(make_batch(1, static_cast<std::size_t>(state.range(0)))[0]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(unet_forward(params, x, 10));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_UNetTrainStep(benchmark::State& state) {
  UNetParams<float> params = unet_init<float>(UNetConfig{}, 0);
  UNetParams<float> grads = unet_zeros<float>(UNetConfig{});
  const NoiseSchedule sched = build_schedule(ScheduleKind::Cosine, 100);
  const std::vector<IQSignal> batch = make_batch(static_cast<int>(state.range(0)), 128);
  Rng rng(4);
  for (auto _ : state) {
    const auto examples = make_training_examples<float>(batch, sched, rng);
    benchmark::DoNotOptimize(unet_loss_and_gradients(params, examples, grads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_UNetForward)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UNetTrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
