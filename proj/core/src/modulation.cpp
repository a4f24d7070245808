#include "modfus/modulation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "modfus/spectral.hpp"

namespace modfus {

namespace {

constexpr double kPi = std::numbers::pi;

// Gray code of a phase/amplitude slot index.
unsigned gray(unsigned p) { return p ^ (p >> 1); }

// Gray-mapped M-PSK: slot p sits at angle offset + 2*pi*p/M and carries
// symbol label gray(p), so bit-adjacent symbols land on adjacent phases.
std::vector<std::complex<double>> gray_psk(unsigned m, double offset) {
  std::vector<std::complex<double>> c(m);
  for (unsigned p = 0; p < m; ++p) {
    const double ang = offset + 2.0 * kPi * p / m;
    c[gray(p)] = {std::cos(ang), std::sin(ang)};
  }
  return c;
}

// Gray-mapped PAM levels 2p-(M-1) for slot p, before normalization.
std::vector<double> gray_pam(unsigned m) {
  std::vector<double> levels(m);
  for (unsigned p = 0; p < m; ++p) {
    levels[gray(p)] = 2.0 * p - (m - 1.0);
  }
  return levels;
}

// Square QAM with independent Gray coding per axis; high bits select I.
std::vector<std::complex<double>> gray_qam(unsigned m, double norm) {
  unsigned side = 1;
  while (side * side < m) ++side;
  const auto pam = gray_pam(side);
  std::vector<std::complex<double>> c(m);
  for (unsigned s = 0; s < m; ++s) {
    const unsigned hi = s / side;
    const unsigned lo = s % side;
    c[s] = {pam[hi] / norm, pam[lo] / norm};
  }
  return c;
}

IQSignal modulate_fsk(const std::vector<int>& symbols, const PulseShape& pulse,
                      bool gaussian) {
  const int sps = std::max(pulse.sps, 1);
  const double h = 0.5;

  // Frequency pulse: rectangle of one symbol, optionally convolved with a
  // Gaussian (BT = 0.3), normalized so each symbol advances phase by pi*h.
  std::vector<double> fp;
  int lead = 0;
  if (!gaussian) {
    fp.assign(sps, 1.0);
  } else {
    const double bt = 0.3;
    const double sigma = sps * std::sqrt(std::numbers::ln2) / (2.0 * kPi * bt);
    const int half = 3 * sps;
    std::vector<double> g(2 * half + 1);
    for (int n = -half; n <= half; ++n) {
      g[n + half] = std::exp(-0.5 * (n / sigma) * (n / sigma));
    }
    fp.assign(sps + 2 * half, 0.0);
    for (int n = 0; n < sps; ++n) {
      for (int m = 0; m < static_cast<int>(g.size()); ++m) fp[n + m] += g[m];
    }
    lead = half;
  }
  double sum = 0.0;
  for (double v : fp) sum += v;
  for (double& v : fp) v *= sps / sum;

  const std::size_t n_out = symbols.size() * static_cast<std::size_t>(sps);
  std::vector<double> freq(n_out, 0.0);
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const double a = symbols[k] == 0 ? -1.0 : 1.0;
    const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(k) * sps - lead;
    for (std::size_t m = 0; m < fp.size(); ++m) {
      const std::ptrdiff_t n = base + static_cast<std::ptrdiff_t>(m);
      if (n >= 0 && n < static_cast<std::ptrdiff_t>(n_out)) {
        freq[n] += a * fp[m] * h / (2.0 * sps);
      }
    }
  }

  IQSignal out;
  out.i.resize(n_out);
  out.q.resize(n_out);
  double phase = 0.0;
  for (std::size_t n = 0; n < n_out; ++n) {
    out.i[n] = std::cos(phase);
    out.q[n] = std::sin(phase);
    phase += 2.0 * kPi * freq[n];
  }
  return out;
}

IQSignal modulate_linear(const std::vector<int>& symbols, ModulationScheme scheme,
                         const PulseShape& pulse) {
  const auto points = constellation(scheme);
  std::vector<std::complex<double>> mapped(symbols.size());
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const int s = symbols[k];
    if (s < 0 || s >= static_cast<int>(points.size())) {
      throw std::out_of_range("modulate: symbol outside alphabet");
    }
    mapped[k] = points[s];
  }

  IQSignal out;
  if (pulse.sps <= 1) {
    out.i.resize(mapped.size());
    out.q.resize(mapped.size());
    for (std::size_t k = 0; k < mapped.size(); ++k) {
      out.i[k] = mapped[k].real();
      out.q[k] = mapped[k].imag();
    }
    return out;
  }

  const auto taps = rrc_taps(pulse);
  const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(taps.size()) / 2;
  const std::size_t n_out = mapped.size() * static_cast<std::size_t>(pulse.sps);
  out.i.assign(n_out, 0.0);
  out.q.assign(n_out, 0.0);
  for (std::size_t k = 0; k < mapped.size(); ++k) {
    const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(k * pulse.sps) - center;
    for (std::size_t m = 0; m < taps.size(); ++m) {
      const std::ptrdiff_t n = base + static_cast<std::ptrdiff_t>(m);
      if (n >= 0 && n < static_cast<std::ptrdiff_t>(n_out)) {
        out.i[n] += taps[m] * mapped[k].real();
        out.q[n] += taps[m] * mapped[k].imag();
      }
    }
  }
  return out;
}

}  // namespace

ModulationScheme scheme_from_string(const std::string& raw) {
  std::string name = raw;
  for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (name == "BPSK") return ModulationScheme::BPSK;
  if (name == "QPSK") return ModulationScheme::QPSK;
  if (name == "PSK8" || name == "8PSK") return ModulationScheme::PSK8;
  if (name == "PAM4") return ModulationScheme::PAM4;
  if (name == "QAM16") return ModulationScheme::QAM16;
  if (name == "QAM64") return ModulationScheme::QAM64;
  if (name == "GFSK") return ModulationScheme::GFSK;
  if (name == "CPFSK") return ModulationScheme::CPFSK;
  if (name == "AM_DSB" || name == "AM-DSB") return ModulationScheme::AM_DSB;
  if (name == "AM_SSB" || name == "AM-SSB") return ModulationScheme::AM_SSB;
  if (name == "WBFM") return ModulationScheme::WBFM;
  throw std::invalid_argument("unknown modulation scheme: " + name);
}

std::string scheme_to_string(ModulationScheme scheme) {
  switch (scheme) {
    case ModulationScheme::BPSK: return "BPSK";
    case ModulationScheme::QPSK: return "QPSK";
    case ModulationScheme::PSK8: return "PSK8";
    case ModulationScheme::PAM4: return "PAM4";
    case ModulationScheme::QAM16: return "QAM16";
    case ModulationScheme::QAM64: return "QAM64";
    case ModulationScheme::GFSK: return "GFSK";
    case ModulationScheme::CPFSK: return "CPFSK";
    case ModulationScheme::AM_DSB: return "AM_DSB";
    case ModulationScheme::AM_SSB: return "AM_SSB";
    case ModulationScheme::WBFM: return "WBFM";
  }
  throw std::invalid_argument("unknown modulation scheme");
}

bool is_analog(ModulationScheme scheme) {
  return scheme == ModulationScheme::AM_DSB || scheme == ModulationScheme::AM_SSB ||
         scheme == ModulationScheme::WBFM;
}

int alphabet_size(ModulationScheme scheme) {
  switch (scheme) {
    case ModulationScheme::BPSK: return 2;
    case ModulationScheme::QPSK: return 4;
    case ModulationScheme::PSK8: return 8;
    case ModulationScheme::PAM4: return 4;
    case ModulationScheme::QAM16: return 16;
    case ModulationScheme::QAM64: return 64;
    case ModulationScheme::GFSK: return 2;
    case ModulationScheme::CPFSK: return 2;
    default:
      throw std::invalid_argument("alphabet_size: analog scheme");
  }
}

std::vector<std::complex<double>> constellation(ModulationScheme scheme) {
  switch (scheme) {
    case ModulationScheme::BPSK:
      return {{1.0, 0.0}, {-1.0, 0.0}};
    case ModulationScheme::QPSK:
      return gray_psk(4, kPi / 4.0);
    case ModulationScheme::PSK8:
      return gray_psk(8, 0.0);
    case ModulationScheme::PAM4: {
      const auto levels = gray_pam(4);
      std::vector<std::complex<double>> c(4);
      for (int s = 0; s < 4; ++s) c[s] = {levels[s] / std::sqrt(5.0), 0.0};
      return c;
    }
    case ModulationScheme::QAM16:
      return gray_qam(16, std::sqrt(10.0));
    case ModulationScheme::QAM64:
      return gray_qam(64, std::sqrt(42.0));
    default:
      throw std::invalid_argument("constellation: scheme has no linear constellation");
  }
}

std::vector<double> rrc_taps(const PulseShape& pulse) {
  if (pulse.sps < 1 || pulse.rolloff <= 0.0 || pulse.rolloff > 1.0 || pulse.span < 1) {
    throw std::invalid_argument("rrc_taps: bad pulse parameters");
  }
  const double beta = pulse.rolloff;
  const int n_taps = pulse.span * pulse.sps + 1;
  const int center = n_taps / 2;
  std::vector<double> taps(n_taps);
  for (int n = 0; n < n_taps; ++n) {
    const double u = static_cast<double>(n - center) / pulse.sps;
    double v;
    if (std::abs(u) < 1e-12) {
      v = 1.0 - beta + 4.0 * beta / kPi;
    } else if (std::abs(std::abs(u) - 1.0 / (4.0 * beta)) < 1e-9) {
      v = (beta / std::sqrt(2.0)) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) +
           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
    } else {
      const double num =
          std::sin(kPi * u * (1.0 - beta)) + 4.0 * beta * u * std::cos(kPi * u * (1.0 + beta));
      const double den = kPi * u * (1.0 - (4.0 * beta * u) * (4.0 * beta * u));
      v = num / den;
    }
    taps[n] = v;
  }
  double energy = 0.0;
  for (double t : taps) energy += t * t;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& t : taps) t *= scale;
  return taps;
}

IQSignal modulate(const std::vector<int>& symbols, ModulationScheme scheme,
                  const PulseShape& pulse) {
  if (symbols.empty()) throw std::invalid_argument("modulate: empty symbol sequence");
  if (is_analog(scheme)) {
    throw std::invalid_argument("modulate: analog schemes take a message sequence");
  }
  for (int s : symbols) {
    if (s < 0 || s >= alphabet_size(scheme)) {
      throw std::out_of_range("modulate: symbol outside alphabet");
    }
  }

  IQSignal out;
  if (scheme == ModulationScheme::GFSK || scheme == ModulationScheme::CPFSK) {
    out = modulate_fsk(symbols, pulse, scheme == ModulationScheme::GFSK);
  } else {
    out = modulate_linear(symbols, scheme, pulse);
  }
  return normalize_power(out);
}

IQSignal modulate_analog(const std::vector<double>& message, ModulationScheme scheme) {
  if (message.empty()) throw std::invalid_argument("modulate_analog: empty message");
  const std::size_t n = message.size();
  IQSignal out;
  out.i.resize(n);
  out.q.resize(n);
  switch (scheme) {
    case ModulationScheme::AM_DSB:
      for (std::size_t k = 0; k < n; ++k) {
        out.i[k] = 1.0 + 0.5 * message[k];
        out.q[k] = 0.0;
      }
      break;
    case ModulationScheme::AM_SSB: {
      const auto a = analytic_signal(message);
      for (std::size_t k = 0; k < n; ++k) {
        out.i[k] = a[k].real();
        out.q[k] = a[k].imag();
      }
      break;
    }
    case ModulationScheme::WBFM: {
      const double fdev = 0.05;
      double phase = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        out.i[k] = std::cos(phase);
        out.q[k] = std::sin(phase);
        phase += 2.0 * kPi * fdev * message[k];
      }
      break;
    }
    default:
      throw std::invalid_argument("modulate_analog: digital scheme");
  }
  return normalize_power(out);
}

std::vector<double> lowpass_message(std::size_t length, double cutoff, Rng& rng) {
  if (length == 0) throw std::invalid_argument("lowpass_message: empty");
  std::vector<std::complex<double>> spec(length);
  for (auto& v : spec) v = {rng.normal(), 0.0};
  spec = fft(spec);
  for (std::size_t k = 0; k < length; ++k) {
    const double f = static_cast<double>(std::min(k, length - k)) / length;
    if (f > cutoff) spec[k] = 0.0;
  }
  const auto filtered = ifft(spec);
  std::vector<double> msg(length);
  double power = 0.0;
  for (std::size_t k = 0; k < length; ++k) {
    msg[k] = filtered[k].real();
    power += msg[k] * msg[k];
  }
  power /= length;
  const double scale = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
  for (double& v : msg) v *= scale;
  return msg;
}

IQSignal random_modulated_signal(ModulationScheme scheme, std::size_t length,
                                 const PulseShape& pulse, Rng& rng) {
  if (length == 0) throw std::invalid_argument("random_modulated_signal: empty");
  if (is_analog(scheme)) {
    const auto msg = lowpass_message(length, 0.1, rng);
    return modulate_analog(msg, scheme);
  }
  const int sps = std::max(pulse.sps, 1);
  const std::size_t n_symbols = (length + sps - 1) / sps;
  std::vector<int> symbols(n_symbols);
  const int m = alphabet_size(scheme);
  for (auto& s : symbols) s = static_cast<int>(rng.uniform_int(0, m - 1));
  IQSignal sig = modulate(symbols, scheme, pulse);
  if (sig.length() > length) sig = crop(sig, length, 0);
  return sig;
}

}  // namespace modfus
