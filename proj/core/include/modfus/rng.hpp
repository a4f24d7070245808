#pragma once

#include <cstdint>

namespace modfus {

// Deterministic random stream with explicit substream derivation, so that
// per-signal / per-trial consumers can draw independently of evaluation
// order. Draw routines are implemented here rather than with <random>
// distributions, which are not specified bit-exactly across standard
// library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  // Independent substream addressed by one or two tags. Derivation only
  // depends on the constructing seed, not on how much has been drawn.
  Rng derive(std::uint64_t tag_a, std::uint64_t tag_b = 0) const;

  std::uint64_t next_u64();
  double uniform();                                             // [0, 1)
  double uniform(double lo, double hi);                         // [lo, hi)
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);   // [lo, hi]
  double normal();                                              // N(0, 1)

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_[4] = {0, 0, 0, 0};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stateless 64-bit mixer used for seed derivation and content hashing.
std::uint64_t mix64(std::uint64_t x);

}  // namespace modfus
