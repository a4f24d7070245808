#include "modfus/signal.hpp"

#include <cmath>
#include <stdexcept>

namespace modfus {

void validate(const IQSignal& sig) {
  if (sig.i.size() != sig.q.size()) {
    throw std::invalid_argument("IQSignal: channel lengths differ");
  }
  if (sig.i.empty()) {
    throw std::invalid_argument("IQSignal: empty signal");
  }
  for (std::size_t n = 0; n < sig.i.size(); ++n) {
    if (!std::isfinite(sig.i[n]) || !std::isfinite(sig.q[n])) {
      throw std::invalid_argument("IQSignal: non-finite sample");
    }
  }
}

double mean_power(const IQSignal& sig) {
  if (sig.i.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t n = 0; n < sig.i.size(); ++n) {
    acc += sig.i[n] * sig.i[n] + sig.q[n] * sig.q[n];
  }
  return acc / static_cast<double>(sig.i.size());
}

IQSignal normalize_power(const IQSignal& sig) {
  const double p = mean_power(sig);
  if (p <= 0.0) {
    throw std::invalid_argument("normalize_power: zero-power signal");
  }
  const double scale = 1.0 / std::sqrt(p);
  IQSignal out(sig.length());
  for (std::size_t n = 0; n < sig.length(); ++n) {
    out.i[n] = sig.i[n] * scale;
    out.q[n] = sig.q[n] * scale;
  }
  return out;
}

IQSignal crop(const IQSignal& sig, std::size_t target_len, std::size_t offset) {
  if (target_len == 0) {
    throw std::invalid_argument("crop: target length must be positive");
  }
  if (offset + target_len > sig.length()) {
    throw std::invalid_argument("crop: window exceeds signal length");
  }
  IQSignal out(target_len);
  for (std::size_t n = 0; n < target_len; ++n) {
    out.i[n] = sig.i[offset + n];
    out.q[n] = sig.q[offset + n];
  }
  return out;
}

}  // namespace modfus
