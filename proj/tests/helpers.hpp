#pragma once

#include <unistd.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

// Per-process scratch directory; left behind for post-mortem inspection.
inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    std::filesystem::path d = std::filesystem::temp_directory_path() /
                              ("modfus-tests-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

inline std::string path_in_scratch(const std::string& name) {
  return (scratch_dir() / name).string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Direct O(N^2) DFT. Deliberately shares no code with the library transform
// it checks; a twiddle table keeps it fast enough for Welch-style averaging.
inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> tw(n);
  for (std::size_t r = 0; r < n; ++r) {
    tw[r] = std::polar(1.0, -2.0 * M_PI * static_cast<double>(r) / static_cast<double>(n));
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) acc += x[m] * tw[(k * m) % n];
    out[k] = acc;
  }
  return out;
}

}  // namespace testutil
