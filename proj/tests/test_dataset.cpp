#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "modfus/dataset.hpp"
#include "modfus/errors.hpp"

using modfus::Dataset;
using modfus::IQSignal;
using modfus::SplitSpec;

namespace {

// Values chosen to be float32-representable so round-trips compare exactly.
Dataset small_dataset(int per_class = 3, int classes = 2, std::size_t length = 8) {
  Dataset ds;
  for (int c = 0; c < classes; ++c) ds.class_names.push_back("CLASS" + std::to_string(c));
  int k = 0;
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < per_class; ++s, ++k) {
      IQSignal sig(length);
      for (std::size_t n = 0; n < length; ++n) {
        sig.i[n] = 0.25 * k + 0.5 * static_cast<double>(n);
        sig.q[n] = -0.125 * k;
      }
      ds.signals.push_back(sig);
      ds.labels.push_back(c);
      ds.snrs.push_back(10.0 + c);
    }
  }
  return ds;
}

bool equal_datasets(const Dataset& a, const Dataset& b) {
  if (a.labels != b.labels || a.snrs != b.snrs || a.class_names != b.class_names) return false;
  if (a.signals.size() != b.signals.size()) return false;
  for (std::size_t k = 0; k < a.signals.size(); ++k) {
    if (a.signals[k].i != b.signals[k].i || a.signals[k].q != b.signals[k].q) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("validate rejects inconsistent field lists") {
  Dataset ds = small_dataset();
  CHECK_NOTHROW(modfus::validate(ds));

  Dataset bad_label = ds;
  bad_label.labels[0] = 5;
  CHECK_THROWS_AS(modfus::validate(bad_label), std::invalid_argument);

  Dataset short_snrs = ds;
  short_snrs.snrs.pop_back();
  CHECK_THROWS_AS(modfus::validate(short_snrs), std::invalid_argument);

  Dataset ragged = ds;
  ragged.signals[1] = IQSignal(4);
  CHECK_THROWS_AS(modfus::validate(ragged), std::invalid_argument);
}

TEST_CASE("save and load round-trip exactly") {
  Dataset ds = small_dataset();
  const std::string path = testutil::path_in_scratch("roundtrip.mfds");
  modfus::save(ds, path);
  Dataset back = modfus::load(path);
  CHECK(equal_datasets(ds, back));
}

TEST_CASE("empty dataset round-trips") {
  Dataset ds;
  ds.class_names = {"BPSK"};
  const std::string path = testutil::path_in_scratch("empty.mfds");
  modfus::save(ds, path);
  Dataset back = modfus::load(path);
  CHECK(back.size() == 0);
  CHECK(back.class_names == ds.class_names);
}

TEST_CASE("load rejects damaged files") {
  Dataset ds = small_dataset();
  const std::string path = testutil::path_in_scratch("damaged.mfds");
  modfus::save(ds, path);
  const std::string good = testutil::slurp(path);

  SUBCASE("wrong magic") {
    std::string bytes = good;
    bytes[0] = 'X';
    testutil::spit(path, bytes);
    CHECK_THROWS_AS(modfus::load(path), modfus::FormatError);
  }
  SUBCASE("wrong version") {
    std::string bytes = good;
    bytes[8] = 99;  // u16 LE version immediately after the magic
    testutil::spit(path, bytes);
    CHECK_THROWS_AS(modfus::load(path), modfus::FormatError);
  }
  SUBCASE("truncated payload") {
    testutil::spit(path, good.substr(0, good.size() - 7));
    CHECK_THROWS_AS(modfus::load(path), modfus::FormatError);
  }
  SUBCASE("truncated header") {
    testutil::spit(path, good.substr(0, 10));
    CHECK_THROWS_AS(modfus::load(path), modfus::FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(modfus::load(testutil::path_in_scratch("nope.mfds")), modfus::FormatError);
  }
}

TEST_CASE("limited-label split draws N per class-SNR cell") {
  Dataset ds = small_dataset(25, 4);  // one SNR per class, 25 each
  SplitSpec spec;
  spec.n_per_type_per_snr = 10;
  spec.trials = 5;
  spec.seed = 42;

  auto split = modfus::split_limited_label(ds, spec, 0);
  CHECK(split.labeled.size() == 40);
  CHECK(split.test.size() == ds.size() - 40);

  // Disjoint and exhaustive.
  std::set<std::size_t> seen(split.labeled.begin(), split.labeled.end());
  for (auto idx : split.test) CHECK(seen.insert(idx).second);
  CHECK(seen.size() == ds.size());

  // Exactly N from every cell.
  std::vector<int> per_class(4, 0);
  for (auto idx : split.labeled) per_class[ds.labels[idx]]++;
  for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 10);
}

TEST_CASE("split trials differ but reproduce") {
  Dataset ds = small_dataset(25, 4);
  SplitSpec spec;
  spec.n_per_type_per_snr = 10;
  spec.trials = 5;
  spec.seed = 42;

  auto t0 = modfus::split_limited_label(ds, spec, 0);
  auto t1 = modfus::split_limited_label(ds, spec, 1);
  auto t0_again = modfus::split_limited_label(ds, spec, 0);

  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(t0.labeled) != sorted(t1.labeled));
  CHECK(t0.labeled == t0_again.labeled);
  CHECK(t0.test == t0_again.test);
}

TEST_CASE("infeasible split budget throws") {
  Dataset ds = small_dataset(3, 2);
  SplitSpec spec;
  spec.n_per_type_per_snr = 10;
  CHECK_THROWS_AS(modfus::split_limited_label(ds, spec, 0), std::invalid_argument);
}

TEST_CASE("minibatches partition the index range") {
  auto batches = modfus::minibatches(10, 4, 7, 0);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);

  std::set<std::size_t> all;
  for (const auto& b : batches) {
    for (auto idx : b) CHECK(all.insert(idx).second);
  }
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);
}

TEST_CASE("minibatch order is per-epoch deterministic") {
  auto a = modfus::minibatches(100, 16, 7, 3);
  auto b = modfus::minibatches(100, 16, 7, 3);
  CHECK(a == b);
  auto c = modfus::minibatches(100, 16, 7, 4);
  CHECK(a != c);
}

TEST_CASE("subset keeps parallel fields aligned") {
  Dataset ds = small_dataset(3, 2);
  Dataset sub = modfus::subset(ds, {5, 0, 3});
  REQUIRE(sub.size() == 3);
  CHECK(sub.labels[0] == ds.labels[5]);
  CHECK(sub.labels[1] == ds.labels[0]);
  CHECK(sub.snrs[2] == ds.snrs[3]);
  CHECK(sub.signals[1].i == ds.signals[0].i);
  CHECK(sub.class_names == ds.class_names);
}

}  // TEST_SUITE
