#include "modfus/spectral.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace modfus {

namespace {

// FFTW plan creation is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x, int sign) {
  if (x.empty()) {
    throw std::invalid_argument("dft: empty input");
  }
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  // FFTW_ESTIMATE does not touch the arrays, so planning on the actual
  // buffers is safe.
  auto* in_ptr = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(x.data()));
  auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), in_ptr, out_ptr, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x) {
  return dft(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& x) {
  auto out = dft(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> spec(n);
  for (std::size_t k = 0; k < n; ++k) spec[k] = std::complex<double>(x[k], 0.0);
  spec = fft(spec);
  // Keep DC and Nyquist as-is, double positive frequencies, zero the rest.
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
  return ifft(spec);
}

}  // namespace modfus
