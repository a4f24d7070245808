#pragma once

#include <stdexcept>
#include <string>

namespace modfus {

// Malformed or incompatible on-disk data (bad magic, version, truncation).
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace modfus
