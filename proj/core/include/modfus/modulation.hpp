#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "modfus/rng.hpp"
#include "modfus/signal.hpp"

namespace modfus {

enum class ModulationScheme {
  BPSK,
  QPSK,
  PSK8,
  PAM4,
  QAM16,
  QAM64,
  GFSK,
  CPFSK,
  AM_DSB,
  AM_SSB,
  WBFM,
};

ModulationScheme scheme_from_string(const std::string& name);
std::string scheme_to_string(ModulationScheme scheme);
bool is_analog(ModulationScheme scheme);

// Alphabet size for digital schemes; throws for analog ones.
int alphabet_size(ModulationScheme scheme);

// Unit-average-power constellation, Gray-mapped, indexed by symbol value.
// Only defined for the linearly modulated schemes (PSK/PAM/QAM).
std::vector<std::complex<double>> constellation(ModulationScheme scheme);

struct PulseShape {
  int sps = 8;           // samples per symbol; 1 disables shaping
  double rolloff = 0.35; // RRC roll-off in (0, 1]
  int span = 8;          // filter span in symbols
};

// Root-raised-cosine taps, unit energy, length span*sps + 1.
std::vector<double> rrc_taps(const PulseShape& pulse);

// Maps symbols (or a real message for analog schemes, passed via `message`)
// to a unit-average-power baseband signal of length sps * n_symbols.
IQSignal modulate(const std::vector<int>& symbols, ModulationScheme scheme,
                  const PulseShape& pulse);

// Analog variant: message samples are consumed one per output sample.
IQSignal modulate_analog(const std::vector<double>& message, ModulationScheme scheme);

// Lowpass-filtered Gaussian noise with the given cutoff in cycles/sample,
// scaled to unit RMS. The message model behind the analog schemes.
std::vector<double> lowpass_message(std::size_t length, double cutoff, Rng& rng);

// Draws symbols / message and modulates, producing `length` samples.
IQSignal random_modulated_signal(ModulationScheme scheme, std::size_t length,
                                 const PulseShape& pulse, Rng& rng);

}  // namespace modfus
