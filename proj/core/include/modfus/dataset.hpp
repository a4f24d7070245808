#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modfus/signal.hpp"

namespace modfus {

struct Dataset {
  std::vector<IQSignal> signals;
  std::vector<int> labels;        // indices into class_names
  std::vector<double> snrs;       // per-signal SNR in dB
  std::vector<std::string> class_names;

  std::size_t size() const { return signals.size(); }
  std::size_t signal_length() const { return signals.empty() ? 0 : signals.front().length(); }
};

// Throws std::invalid_argument if the parallel lists disagree, a label is out
// of range, or signal lengths differ.
void validate(const Dataset& ds);

// File format: "MODFUSDS", u16 LE version (=1), u32 LE JSON header length,
// JSON header, then raw LE float32 samples, signal-major, I then Q.
void save(const Dataset& ds, const std::string& path);
Dataset load(const std::string& path);  // throws FormatError

struct SplitSpec {
  int n_per_type_per_snr = 10;
  int trials = 10;
  std::uint64_t seed = 0;
};

struct LabeledSplit {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> test;
};

// Draws exactly N signals per (label, SNR) cell without replacement; the rest
// of each cell forms the test set. Deterministic per (spec.seed, trial).
LabeledSplit split_limited_label(const Dataset& ds, const SplitSpec& spec, int trial);

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

// Seeded permutation of [0, n) cut into batches; the last may be short.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size,
                                                  std::uint64_t seed, std::uint64_t epoch);

}  // namespace modfus
