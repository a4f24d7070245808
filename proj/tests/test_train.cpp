#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "modfus/errors.hpp"
#include "modfus/schedule.hpp"
#include "modfus/synth.hpp"
#include "modfus/train.hpp"
#include "modfus/unet.hpp"

using modfus::Dataset;
using modfus::NoiseSchedule;
using modfus::TrainHyper;
using modfus::UNetConfig;

namespace {

Dataset tiny_dataset(std::uint64_t seed = 3) {
  modfus::SynthSpec spec;
  spec.schemes = {"BPSK", "QPSK"};
  spec.snrs_db = {18.0};
  spec.count_per_scheme_per_snr = 16;
  spec.length = 32;
  return modfus::synth_dataset(spec, seed);
}

UNetConfig tiny_config() {
  UNetConfig config;
  config.down_channels = {4, 6, 8, 10};
  config.up_channels = {8, 6, 4, 4};
  config.time_dim = 8;
  config.norm_groups = 2;
  return config;
}

bool params_equal(const modfus::UNetParams<float>& a, const modfus::UNetParams<float>& b) {
  bool equal = true;
  std::vector<const std::vector<float>*> ta, tb;
  modfus::for_each_tensor(a, [&](const std::string&, const std::vector<int>&,
                                 const std::vector<float>& d) { ta.push_back(&d); });
  modfus::for_each_tensor(b, [&](const std::string&, const std::vector<int>&,
                                 const std::vector<float>& d) { tb.push_back(&d); });
  for (std::size_t k = 0; k < ta.size(); ++k) equal = equal && (*ta[k] == *tb[k]);
  return equal && ta.size() == tb.size();
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("loss starts near 1 and falls") {
  Dataset ds = tiny_dataset();
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  auto params = modfus::unet_init<float>(tiny_config(), 5);

  TrainHyper hyper;
  hyper.epochs = 20;
  hyper.batch_size = 8;
  hyper.lr = 1e-3;
  hyper.seed = 6;
  auto result = modfus::train_diffusion(params, ds, sched, hyper);

  REQUIRE(result.epoch_losses.size() == 20);
  CHECK(result.first_epoch == 0);
  // Fresh model predicts 0, so the first epoch sits near E[eps^2] = 1.
  CHECK(result.epoch_losses.front() > 0.7);
  CHECK(result.epoch_losses.front() < 1.3);
  CHECK(result.epoch_losses.back() < result.epoch_losses.front());
  for (double loss : result.epoch_losses) CHECK(std::isfinite(loss));
}

TEST_CASE("training is bit-reproducible per seed") {
  Dataset ds = tiny_dataset();
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  TrainHyper hyper;
  hyper.epochs = 5;
  hyper.batch_size = 8;
  hyper.seed = 6;

  auto pa = modfus::unet_init<float>(tiny_config(), 5);
  auto pb = modfus::unet_init<float>(tiny_config(), 5);
  auto ra = modfus::train_diffusion(pa, ds, sched, hyper);
  auto rb = modfus::train_diffusion(pb, ds, sched, hyper);

  CHECK(ra.epoch_losses == rb.epoch_losses);
  CHECK(params_equal(pa, pb));
}

TEST_CASE("resume continues the epoch counter") {
  Dataset ds = tiny_dataset();
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  TrainHyper hyper;
  hyper.epochs = 6;
  hyper.batch_size = 8;
  hyper.seed = 6;

  auto params = modfus::unet_init<float>(tiny_config(), 5);
  TrainHyper first = hyper;
  first.epochs = 3;
  auto r1 = modfus::train_diffusion(params, ds, sched, first);
  CHECK(r1.epoch_losses.size() == 3);

  auto r2 = modfus::train_diffusion(params, ds, sched, hyper, 3);
  CHECK(r2.first_epoch == 3);
  CHECK(r2.epoch_losses.size() == 3);

  // Nothing left to do when the target is already met.
  auto r3 = modfus::train_diffusion(params, ds, sched, hyper, 6);
  CHECK(r3.epoch_losses.empty());
}

TEST_CASE("absurd learning rates raise a divergence error") {
  Dataset ds = tiny_dataset();
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  auto params = modfus::unet_init<float>(tiny_config(), 5);
  TrainHyper hyper;
  hyper.epochs = 4;
  hyper.batch_size = 8;
  hyper.lr = 1e40;
  hyper.seed = 6;
  CHECK_THROWS_AS(modfus::train_diffusion(params, ds, sched, hyper), modfus::DivergenceError);
}

TEST_CASE("degenerate inputs are rejected") {
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  auto params = modfus::unet_init<float>(tiny_config(), 5);
  TrainHyper hyper;
  hyper.epochs = 1;

  Dataset empty;
  CHECK_THROWS_AS(modfus::train_diffusion(params, empty, sched, hyper), std::invalid_argument);

  Dataset ds = tiny_dataset();
  hyper.batch_size = 0;
  CHECK_THROWS_AS(modfus::train_diffusion(params, ds, sched, hyper), std::invalid_argument);
}

}  // TEST_SUITE
