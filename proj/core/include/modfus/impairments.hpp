#pragma once

#include <complex>
#include <cstdint>
#include <limits>

#include "modfus/rng.hpp"
#include "modfus/signal.hpp"

namespace modfus {

struct ImpairmentParams {
  std::complex<double> alpha = {1.0, 0.0};  // flat fading coefficient, |alpha| > 0
  std::int64_t tau = 0;                     // timing offset in samples, 0 <= tau < L
  double delta_f_norm = 0.0;                // CFO in cycles/sample, [-0.5, 0.5)
  double phi = 0.0;                         // initial phase in radians
  double snr_db = std::numeric_limits<double>::infinity();  // +inf disables noise
};

// out[n] = alpha * sig[n - tau] * exp(j(2*pi*delta_f_norm*n + phi)) + w[n],
// out-of-range indices zero-filled, w sized so SNR(out) = snr_db.
IQSignal apply_impairments(const IQSignal& sig, const ImpairmentParams& p, Rng& rng);

// Complex Gaussian noise with total variance P_sig / 10^(snr_db/10), split
// evenly across I and Q. snr_db = +inf is the no-noise sentinel.
IQSignal add_awgn(const IQSignal& sig, double snr_db, Rng& rng);

// One flat-fading draw h = x + jy, x,y ~ N(0, sigma2), applied to the whole
// signal. E[|h|^2] = 2*sigma2.
IQSignal rayleigh_fade(const IQSignal& sig, double sigma2, Rng& rng);

// h = sqrt(K/(K+1))*e^{j theta} + sqrt(1/(K+1))*g with theta uniform and
// g ~ CN(0,1), so E[|h|^2] = 1.
IQSignal rician_fade(const IQSignal& sig, double k_factor, Rng& rng);

}  // namespace modfus
