#pragma once

#include <cstdint>
#include <vector>

#include "modfus/dataset.hpp"
#include "modfus/schedule.hpp"
#include "modfus/unet.hpp"

namespace modfus {

struct TrainHyper {
  int epochs = 2000;  // target total epoch count; resuming trains the remainder
  int batch_size = 64;
  double lr = 2e-4;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> epoch_losses;  // one entry per epoch run by this call
  int first_epoch = 0;               // epoch index of epoch_losses[0]
};

// Decoupled-weight-decay adaptive-moment training of the noise predictor.
// Per-epoch batch order and (t, eps) draws derive from (seed, epoch), so a
// resumed run sees the same data stream as an uninterrupted one. Throws
// DivergenceError when the loss stops being finite.
TrainResult train_diffusion(UNetParams<float>& params, const Dataset& ds,
                            const NoiseSchedule& sched, const TrainHyper& hyper,
                            int start_epoch = 0);

}  // namespace modfus
