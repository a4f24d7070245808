#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace modfus {

// Complex baseband sequence stored as two real channels of equal length.
struct IQSignal {
  std::vector<double> i;
  std::vector<double> q;

  IQSignal() = default;
  explicit IQSignal(std::size_t length) : i(length, 0.0), q(length, 0.0) {}
  IQSignal(std::vector<double> in_phase, std::vector<double> quadrature)
      : i(std::move(in_phase)), q(std::move(quadrature)) {}

  std::size_t length() const { return i.size(); }

  std::complex<double> at(std::size_t n) const { return {i[n], q[n]}; }
  void set(std::size_t n, std::complex<double> v) {
    i[n] = v.real();
    q[n] = v.imag();
  }
};

// Throws std::invalid_argument if channels differ in length, the signal is
// empty, or any value is non-finite.
void validate(const IQSignal& sig);

// Mean of i^2 + q^2 over all samples.
double mean_power(const IQSignal& sig);

// Scales the signal to unit mean power. Throws on zero-power input.
IQSignal normalize_power(const IQSignal& sig);

// Contiguous sub-signal [offset, offset + target_len). Throws when the
// requested window exceeds the signal.
IQSignal crop(const IQSignal& sig, std::size_t target_len, std::size_t offset);

}  // namespace modfus
