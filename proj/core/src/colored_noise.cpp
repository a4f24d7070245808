#include "modfus/colored_noise.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "modfus/spectral.hpp"

namespace modfus {

NoiseColor noise_color_from_string(const std::string& name) {
  if (name == "white") return NoiseColor::White;
  if (name == "pink") return NoiseColor::Pink;
  if (name == "red") return NoiseColor::Red;
  if (name == "blue") return NoiseColor::Blue;
  throw std::invalid_argument("unknown noise color: " + name);
}

std::string noise_color_to_string(NoiseColor color) {
  switch (color) {
    case NoiseColor::White: return "white";
    case NoiseColor::Pink: return "pink";
    case NoiseColor::Red: return "red";
    case NoiseColor::Blue: return "blue";
  }
  throw std::invalid_argument("unknown noise color");
}

double noise_color_exponent(NoiseColor color) {
  switch (color) {
    case NoiseColor::White: return 0.0;
    case NoiseColor::Pink: return -1.0;
    case NoiseColor::Red: return -2.0;
    case NoiseColor::Blue: return 1.0;
  }
  throw std::invalid_argument("unknown noise color");
}

IQSignal colored_noise(std::size_t length, NoiseColor color, double power, Rng& rng) {
  if (length < 16) throw std::invalid_argument("colored_noise: length must be >= 16");
  if (power <= 0.0) throw std::invalid_argument("colored_noise: power must be positive");

  std::vector<std::complex<double>> spec(length);
  for (auto& v : spec) v = {rng.normal(), rng.normal()};
  spec = fft(spec);

  // PSD ~ f^beta means amplitude ~ f^(beta/2). The DC bin carries no
  // frequency, so it is zeroed to keep negative exponents finite.
  const double half_beta = noise_color_exponent(color) / 2.0;
  spec[0] = 0.0;
  for (std::size_t k = 1; k < length; ++k) {
    const double f = static_cast<double>(std::min(k, length - k)) / length;
    spec[k] *= std::pow(f, half_beta);
  }

  auto shaped = ifft(spec);
  double p = 0.0;
  for (const auto& v : shaped) p += std::norm(v);
  p /= length;
  const double scale = std::sqrt(power / p);

  IQSignal out;
  out.i.resize(length);
  out.q.resize(length);
  for (std::size_t k = 0; k < length; ++k) {
    out.i[k] = scale * shaped[k].real();
    out.q[k] = scale * shaped[k].imag();
  }
  return out;
}

IQSignal add_colored_noise(const IQSignal& sig, NoiseColor color, double snr_db, Rng& rng) {
  validate(sig);
  if (std::isinf(snr_db) && snr_db > 0.0) return sig;
  const double p_sig = mean_power(sig);
  if (p_sig <= 0.0) throw std::invalid_argument("add_colored_noise: zero-power input");
  const double noise_power = p_sig / std::pow(10.0, snr_db / 10.0);
  const IQSignal noise = colored_noise(sig.length(), color, noise_power, rng);
  IQSignal out = sig;
  for (std::size_t k = 0; k < out.length(); ++k) {
    out.i[k] += noise.i[k];
    out.q[k] += noise.q[k];
  }
  return out;
}

}  // namespace modfus
