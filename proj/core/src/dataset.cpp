#include "modfus/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "modfus/errors.hpp"
#include "modfus/rng.hpp"
#include "wire.hpp"

namespace modfus {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'D', 'F', 'U', 'S', 'D', 'S'};
constexpr std::uint16_t kVersion = 1;

// +-inf SNR is legal in memory but JSON has no literal for it.
nlohmann::json snr_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double snr_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("dataset: bad snr value '" + s + "'");
  }
  if (!j.is_number()) throw FormatError("dataset: snr is not a number");
  return j.get<double>();
}

}  // namespace

void validate(const Dataset& ds) {
  const std::size_t n = ds.signals.size();
  if (ds.labels.size() != n || ds.snrs.size() != n) {
    throw std::invalid_argument("dataset: parallel lists differ in length");
  }
  const std::size_t len = ds.signal_length();
  for (std::size_t k = 0; k < n; ++k) {
    if (ds.signals[k].length() != len) {
      throw std::invalid_argument("dataset: signals differ in length");
    }
    if (ds.labels[k] < 0 || static_cast<std::size_t>(ds.labels[k]) >= ds.class_names.size()) {
      throw std::invalid_argument("dataset: label out of range");
    }
  }
}

void save(const Dataset& ds, const std::string& path) {
  validate(ds);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dataset: cannot open for writing: " + path);

  nlohmann::json header;
  header["num_signals"] = ds.size();
  header["length"] = ds.signal_length();
  header["class_names"] = ds.class_names;
  header["labels"] = ds.labels;
  auto snrs = nlohmann::json::array();
  for (double v : ds.snrs) snrs.push_back(snr_to_json(v));
  header["snrs"] = std::move(snrs);
  const std::string header_str = header.dump();

  os.write(kMagic, sizeof(kMagic));
  wire::put_u16(os, kVersion);
  wire::put_u32(os, static_cast<std::uint32_t>(header_str.size()));
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& sig : ds.signals) {
    for (double v : sig.i) wire::put_f32(os, static_cast<float>(v));
    for (double v : sig.q) wire::put_f32(os, static_cast<float>(v));
  }
  if (!os) throw std::runtime_error("dataset: write failed: " + path);
}

Dataset load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("dataset: cannot open: " + path);

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("dataset: bad magic");
  }
  const auto version = wire::get_u16(is, "dataset");
  if (version != kVersion) {
    throw FormatError("dataset: unsupported version " + std::to_string(version));
  }
  const auto header_len = wire::get_u32(is, "dataset");
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), header_len);
  if (!is) throw FormatError("dataset: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset: header is not valid JSON: ") + e.what());
  }

  Dataset ds;
  std::size_t num_signals = 0;
  std::size_t length = 0;
  try {
    num_signals = header.at("num_signals").get<std::size_t>();
    length = header.at("length").get<std::size_t>();
    ds.class_names = header.at("class_names").get<std::vector<std::string>>();
    ds.labels = header.at("labels").get<std::vector<int>>();
    for (const auto& j : header.at("snrs")) ds.snrs.push_back(snr_from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset: inconsistent header: ") + e.what());
  }
  if (ds.labels.size() != num_signals || ds.snrs.size() != num_signals) {
    throw FormatError("dataset: header list lengths disagree with num_signals");
  }

  ds.signals.resize(num_signals);
  for (auto& sig : ds.signals) {
    sig.i.resize(length);
    sig.q.resize(length);
    for (auto& v : sig.i) v = wire::get_f32(is, "dataset");
    for (auto& v : sig.q) v = wire::get_f32(is, "dataset");
  }
  try {
    validate(ds);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return ds;
}

LabeledSplit split_limited_label(const Dataset& ds, const SplitSpec& spec, int trial) {
  validate(ds);
  if (spec.n_per_type_per_snr < 1) throw std::invalid_argument("split: N must be >= 1");
  if (trial < 0 || trial >= spec.trials) throw std::invalid_argument("split: trial out of range");

  std::map<std::pair<int, double>, std::vector<std::size_t>> cells;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    cells[{ds.labels[k], ds.snrs[k]}].push_back(k);
  }

  Rng rng = Rng(spec.seed).derive(0x5e711u, static_cast<std::uint64_t>(trial));
  LabeledSplit out;
  const auto n = static_cast<std::size_t>(spec.n_per_type_per_snr);
  for (auto& [key, idx] : cells) {
    if (idx.size() < n) {
      throw std::invalid_argument("split: cell (" + ds.class_names[key.first] + ", " +
                                  std::to_string(key.second) + " dB) has only " +
                                  std::to_string(idx.size()) + " signals, need " +
                                  std::to_string(n));
    }
    for (std::size_t k = idx.size(); k > 1; --k) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1));
      std::swap(idx[k - 1], idx[j]);
    }
    out.labeled.insert(out.labeled.end(), idx.begin(), idx.begin() + n);
    out.test.insert(out.test.end(), idx.begin() + n, idx.end());
  }
  std::sort(out.labeled.begin(), out.labeled.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.class_names = ds.class_names;
  out.signals.reserve(indices.size());
  for (std::size_t k : indices) {
    if (k >= ds.size()) throw std::out_of_range("subset: index out of range");
    out.signals.push_back(ds.signals[k]);
    out.labels.push_back(ds.labels[k]);
    out.snrs.push_back(ds.snrs[k]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size,
                                                  std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 1) throw std::invalid_argument("minibatches: batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  Rng rng = Rng(seed).derive(0xba7c4u, epoch);
  for (std::size_t k = n; k > 1; --k) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1));
    std::swap(order[k - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace modfus
