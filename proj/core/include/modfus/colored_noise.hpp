#pragma once

#include <string>

#include "modfus/rng.hpp"
#include "modfus/signal.hpp"

namespace modfus {

enum class NoiseColor { White, Pink, Red, Blue };

NoiseColor noise_color_from_string(const std::string& name);
std::string noise_color_to_string(NoiseColor color);

// PSD exponent beta with PSD ~ f^beta: 0, -1, -2, +1.
double noise_color_exponent(NoiseColor color);

// Complex noise of the given total power whose PSD follows f^beta, produced
// by frequency-domain amplitude shaping of white Gaussian noise.
IQSignal colored_noise(std::size_t length, NoiseColor color, double power, Rng& rng);

// Adds colored noise at the SNR implied by the signal power.
IQSignal add_colored_noise(const IQSignal& sig, NoiseColor color, double snr_db, Rng& rng);

}  // namespace modfus
