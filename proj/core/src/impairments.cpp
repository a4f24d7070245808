#include "modfus/impairments.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace modfus {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

IQSignal apply_impairments(const IQSignal& sig, const ImpairmentParams& p, Rng& rng) {
  validate(sig);
  const std::size_t n = sig.length();
  if (std::abs(p.alpha) <= 0.0) throw std::invalid_argument("apply_impairments: |alpha| must be positive");
  if (p.tau < 0 || static_cast<std::size_t>(p.tau) >= n) {
    throw std::invalid_argument("apply_impairments: tau out of range");
  }
  if (p.delta_f_norm < -0.5 || p.delta_f_norm >= 0.5) {
    throw std::invalid_argument("apply_impairments: delta_f_norm out of [-0.5, 0.5)");
  }

  IQSignal out;
  out.i.resize(n);
  out.q.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> v = {0.0, 0.0};
    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(k) - p.tau;
    if (src >= 0) v = p.alpha * sig.at(static_cast<std::size_t>(src));
    const double ang = kTwoPi * p.delta_f_norm * static_cast<double>(k) + p.phi;
    v *= std::complex<double>(std::cos(ang), std::sin(ang));
    out.i[k] = v.real();
    out.q[k] = v.imag();
  }
  return add_awgn(out, p.snr_db, rng);
}

IQSignal add_awgn(const IQSignal& sig, double snr_db, Rng& rng) {
  validate(sig);
  if (std::isinf(snr_db) && snr_db > 0.0) return sig;
  const double p_sig = mean_power(sig);
  if (p_sig <= 0.0) throw std::invalid_argument("add_awgn: zero-power input");
  const double noise_var = p_sig / std::pow(10.0, snr_db / 10.0);
  const double per_component = std::sqrt(noise_var / 2.0);
  IQSignal out = sig;
  for (std::size_t k = 0; k < out.length(); ++k) {
    out.i[k] += per_component * rng.normal();
    out.q[k] += per_component * rng.normal();
  }
  return out;
}

IQSignal rayleigh_fade(const IQSignal& sig, double sigma2, Rng& rng) {
  validate(sig);
  if (sigma2 <= 0.0) throw std::invalid_argument("rayleigh_fade: sigma2 must be positive");
  const double s = std::sqrt(sigma2);
  const std::complex<double> h = {s * rng.normal(), s * rng.normal()};
  IQSignal out;
  out.i.resize(sig.length());
  out.q.resize(sig.length());
  for (std::size_t k = 0; k < sig.length(); ++k) {
    const auto v = h * sig.at(k);
    out.i[k] = v.real();
    out.q[k] = v.imag();
  }
  return out;
}

IQSignal rician_fade(const IQSignal& sig, double k_factor, Rng& rng) {
  validate(sig);
  if (k_factor < 0.0) throw std::invalid_argument("rician_fade: negative K");
  const double theta = rng.uniform(0.0, kTwoPi);
  const std::complex<double> los = {std::cos(theta), std::sin(theta)};
  const std::complex<double> scatter = {rng.normal() / std::sqrt(2.0),
                                        rng.normal() / std::sqrt(2.0)};
  const std::complex<double> h = std::sqrt(k_factor / (k_factor + 1.0)) * los +
                                 std::sqrt(1.0 / (k_factor + 1.0)) * scatter;
  IQSignal out;
  out.i.resize(sig.length());
  out.q.resize(sig.length());
  for (std::size_t k = 0; k < sig.length(); ++k) {
    const auto v = h * sig.at(k);
    out.i[k] = v.real();
    out.q[k] = v.imag();
  }
  return out;
}

}  // namespace modfus
