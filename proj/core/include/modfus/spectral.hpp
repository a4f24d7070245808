#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace modfus {

// Forward DFT, any length.
std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x);

// Inverse DFT scaled by 1/N, so ifft(fft(x)) == x.
std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& x);

// Analytic-signal construction: zeroes the negative-frequency half of the
// spectrum (doubling positive frequencies) and returns the complex result.
std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x);

}  // namespace modfus
