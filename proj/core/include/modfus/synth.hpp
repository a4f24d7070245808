#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modfus/dataset.hpp"
#include "modfus/modulation.hpp"

namespace modfus {

// Per-signal impairment draws for the synthetic grid. The fading coefficient
// is unit magnitude here; fading channels are applied by the evaluation
// harness, not baked into datasets.
struct ImpairmentRanges {
  double cfo_max = 0.005;    // delta_f_norm uniform in [-cfo_max, cfo_max]
  int tau_max = 4;           // timing offset uniform int in [0, tau_max]
  bool random_phase = true;  // phi uniform in [0, 2*pi)
};

struct SynthSpec {
  std::vector<std::string> schemes;
  std::vector<double> snrs_db;
  std::size_t count_per_scheme_per_snr = 0;
  std::size_t length = 128;
  PulseShape pulse;
  ImpairmentRanges impairments;
};

// Deterministic per seed: every signal is generated from a stream derived
// from (seed, global signal index), so the grid order is reproducible and
// order-independent. Class names are the sorted scheme list; every signal is
// normalized to unit average power and quantized to float32 so that saved
// datasets round-trip exactly.
Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed);

}  // namespace modfus
