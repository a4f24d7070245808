#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "modfus/daffus.hpp"
#include "modfus/dataset.hpp"
#include "modfus/evalharness.hpp"
#include "modfus/schedule.hpp"
#include "modfus/synth.hpp"
#include "modfus/unet.hpp"

using modfus::Dataset;
using modfus::EvalReport;
using modfus::FeatureSet;
using modfus::Heads;
using modfus::IQSignal;
using modfus::NoiseSchedule;
using modfus::ProbeSpec;
using modfus::Rng;
using modfus::UNetConfig;

namespace {

UNetConfig tiny_config() {
  UNetConfig config;
  config.down_channels = {4, 6, 8, 10};
  config.up_channels = {8, 6, 4, 4};
  config.time_dim = 8;
  config.norm_groups = 2;
  return config;
}

Dataset flat_dataset(int n_classes, int per_class, std::size_t length, std::uint64_t seed) {
  Dataset ds;
  Rng rng(seed);
  for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("C" + std::to_string(c));
  for (int c = 0; c < n_classes; ++c) {
    for (int k = 0; k < per_class; ++k) {
      IQSignal sig(length);
      for (std::size_t i = 0; i < length; ++i) {
        sig.i[i] = static_cast<float>(rng.normal());
        sig.q[i] = static_cast<float>(rng.normal());
      }
      ds.signals.push_back(modfus::normalize_power(sig));
      ds.labels.push_back(c);
      ds.snrs.push_back(18.0);
    }
  }
  modfus::validate(ds);
  return ds;
}

// Heads that just read coordinate `label` of block 8's pooled features.
Heads coordinate_reader(int n_classes) {
  Heads heads;
  heads.variant = modfus::variant_from_string("single:b8");
  heads.t = 1;
  heads.fusion.d_in = 16;
  heads.fusion.d_out = 16;
  heads.fusion.w.assign(16 * 16, 0.0);
  heads.fusion.b.assign(16, 0.0);
  for (int k = 0; k < 16; ++k) heads.fusion.w[static_cast<std::size_t>(k) * 16 + k] = 1.0;
  heads.clf.n_classes = n_classes;
  heads.clf.d = 16;
  heads.clf.w.assign(static_cast<std::size_t>(n_classes) * 16, 0.0);
  heads.clf.b.assign(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    heads.clf.w[static_cast<std::size_t>(c) * 16 + c] = 10.0;
  }
  return heads;
}

FeatureSet one_hot_features(int hot) {
  FeatureSet fs;
  const int widths[8] = {16, 32, 64, 128, 64, 32, 16, 16};
  for (int b = 0; b < 8; ++b) fs.f[b].assign(widths[b], 0.0);
  fs.f[7][hot] = 1.0;
  return fs;
}

}  // namespace

TEST_SUITE("evalharness") {

TEST_CASE("crafted one-hot features score perfectly") {
  const int n_classes = 4;
  Dataset ds = flat_dataset(n_classes, 5, 32, 1);
  Heads heads = coordinate_reader(n_classes);

  std::vector<FeatureSet> features;
  for (std::size_t k = 0; k < ds.size(); ++k) features.push_back(one_hot_features(ds.labels[k]));

  EvalReport report = modfus::evaluate_features(features, heads, ds);
  CHECK(report.accuracy == 1.0);
  REQUIRE(report.confusion.size() == 4);
  for (int r = 0; r < 4; ++r) {
    std::int64_t row_sum = 0;
    for (int c = 0; c < 4; ++c) {
      row_sum += report.confusion[r][c];
      if (r != c) CHECK(report.confusion[r][c] == 0);
    }
    CHECK(report.confusion[r][r] == 5);
    CHECK(row_sum == 5);
  }
  REQUIRE(report.accuracy_by_snr.count(18.0) == 1);
  CHECK(report.accuracy_by_snr.at(18.0) == 1.0);
}

TEST_CASE("label-independent features score at chance") {
  // Balanced labels make the expected accuracy exactly 1/C for any fixed
  // predictor that never sees the label. 3 SE at n=4000 is 0.0205.
  const int n_classes = 4;
  Dataset ds = flat_dataset(n_classes, 1000, 16, 2);
  Heads heads = coordinate_reader(n_classes);
  Rng rng(3);
  std::vector<FeatureSet> features;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    FeatureSet fs = one_hot_features(0);
    for (auto& v : fs.f[7]) v = rng.normal();
    features.push_back(fs);
  }
  EvalReport report = modfus::evaluate_features(features, heads, ds);
  CHECK(std::abs(report.accuracy - 0.25) <= 0.0205);
}

TEST_CASE("empty test set is rejected") {
  Heads heads = coordinate_reader(2);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  auto backbone = modfus::unet_init<float>(tiny_config(), 7);
  CHECK_THROWS_AS(modfus::evaluate(backbone, heads, Dataset{}, sched), std::invalid_argument);
  CHECK_THROWS_AS(modfus::evaluate_features({}, heads, Dataset{}), std::invalid_argument);
}

TEST_CASE("limited-label aggregation is the exact trial mean") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 11);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);

  modfus::SynthSpec synth;
  synth.schemes = {"BPSK", "QPSK"};
  synth.snrs_db = {18.0};
  synth.count_per_scheme_per_snr = 24;
  synth.length = 32;
  Dataset ds = modfus::synth_dataset(synth, 21);

  ProbeSpec spec;
  spec.split.n_per_type_per_snr = 4;
  spec.split.trials = 3;
  spec.split.seed = 5;
  spec.head.epochs = 5;
  spec.head.d = 16;
  spec.variant = modfus::variant_from_string("single:b8");

  auto features = modfus::extract_features(backbone, ds.signals, sched, spec.head.t,
                                           spec.head.stochastic, spec.head.seed);
  EvalReport report = modfus::run_limited_label_features(features, ds, config, spec);

  REQUIRE(report.per_trial.size() == 3);
  const double mean =
      std::accumulate(report.per_trial.begin(), report.per_trial.end(), 0.0) /
      static_cast<double>(report.per_trial.size());
  CHECK(report.accuracy == mean);
  for (double a : report.per_trial) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
  CHECK(report.metadata.count("variant") == 1);
  CHECK(report.metadata.at("variant") == "single:b8");
  CHECK(report.metadata.count("t") == 1);
  CHECK(report.metadata.count("n_per_type_per_snr") == 1);
  CHECK(report.metadata.count("trials") == 1);

  // Confusion rows sum to the per-class test counts over all trials:
  // (24 - 4) held out per class per trial, 3 trials.
  REQUIRE(report.confusion.size() == 2);
  for (int r = 0; r < 2; ++r) {
    std::int64_t row_sum = 0;
    for (std::int64_t v : report.confusion[r]) row_sum += v;
    CHECK(row_sum == 60);
  }

  EvalReport again = modfus::run_limited_label_features(features, ds, config, spec);
  CHECK(again.accuracy == report.accuracy);
  CHECK(again.per_trial == report.per_trial);

  EvalReport direct = modfus::run_limited_label(backbone, ds, sched, spec);
  CHECK(direct.accuracy == report.accuracy);
}

TEST_CASE("ablation grid covers every cell") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 13);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);

  modfus::SynthSpec synth;
  synth.schemes = {"BPSK", "QPSK"};
  synth.snrs_db = {18.0};
  synth.count_per_scheme_per_snr = 12;
  synth.length = 32;
  Dataset ds = modfus::synth_dataset(synth, 23);

  ProbeSpec spec;
  spec.split.n_per_type_per_snr = 3;
  spec.split.trials = 2;
  spec.head.epochs = 3;
  spec.head.d = 16;

  std::vector<int> t_values = {1, 5};
  std::vector<modfus::VariantSpec> variants = {
      modfus::variant_from_string("daffus"),
      modfus::variant_from_string("fusion_down"),
      modfus::variant_from_string("single:b8"),
  };
  auto result = modfus::run_ablation(backbone, ds, sched, t_values, variants, spec);
  REQUIRE(result.t_values == t_values);
  REQUIRE(result.variants.size() == 3);
  REQUIRE(result.accuracy.size() == 2);
  for (const auto& row : result.accuracy) {
    REQUIRE(row.size() == 3);
    for (double a : row) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
  }
}

TEST_CASE("variable-length crops are seeded and logged") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 17);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);

  modfus::SynthSpec synth;
  synth.schemes = {"BPSK", "QPSK"};
  synth.snrs_db = {18.0};
  synth.count_per_scheme_per_snr = 12;
  synth.length = 64;
  Dataset ds = modfus::synth_dataset(synth, 29);

  ProbeSpec spec;
  spec.split.n_per_type_per_snr = 3;
  spec.split.trials = 2;
  spec.head.epochs = 3;
  spec.head.d = 16;
  spec.variant = modfus::variant_from_string("single:b8");

  std::vector<std::size_t> lengths = {32, 64};
  auto result = modfus::run_variable_length(backbone, ds, sched, lengths, 31, spec);
  REQUIRE(result.lengths == lengths);
  REQUIRE(result.reports.size() == 2);
  REQUIRE(result.offsets.size() == 2);
  REQUIRE(result.offsets[0].size() == ds.size());

  bool any_nonzero = false;
  for (std::size_t off : result.offsets[0]) {
    CHECK(off <= 32);
    any_nonzero = any_nonzero || off > 0;
  }
  CHECK(any_nonzero);
  for (std::size_t off : result.offsets[1]) CHECK(off == 0);

  auto again = modfus::run_variable_length(backbone, ds, sched, lengths, 31, spec);
  CHECK(again.offsets == result.offsets);
  CHECK(again.reports[0].accuracy == result.reports[0].accuracy);

  CHECK_THROWS_AS(modfus::run_variable_length(backbone, ds, sched, {24}, 31, spec),
                  std::invalid_argument);
  CHECK_THROWS_AS(modfus::run_variable_length(backbone, ds, sched, {128}, 31, spec),
                  std::invalid_argument);
}

TEST_CASE("shift evaluation with matching distributions reduces to evaluate") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 19);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);

  modfus::SynthSpec synth;
  synth.schemes = {"BPSK", "QPSK"};
  synth.snrs_db = {18.0};
  synth.count_per_scheme_per_snr = 8;
  synth.length = 32;
  Dataset train_a = modfus::synth_dataset(synth, 41);
  Dataset test_b = modfus::synth_dataset(synth, 43);

  modfus::HeadHyper hyper;
  hyper.epochs = 5;
  hyper.d = 16;
  Heads heads = modfus::train_head(backbone, train_a, sched, hyper,
                                   modfus::variant_from_string("single:b8"));

  EvalReport direct = modfus::evaluate(backbone, heads, test_b, sched);
  EvalReport shifted =
      modfus::run_distribution_shift(backbone, heads, train_a.class_names, test_b, sched);
  CHECK(shifted.accuracy == direct.accuracy);
  CHECK(shifted.confusion == direct.confusion);

  Dataset other = test_b;
  other.class_names = {"BPSK", "PSK8"};
  CHECK_THROWS_AS(
      modfus::run_distribution_shift(backbone, heads, train_a.class_names, other, sched),
      std::invalid_argument);
}

TEST_CASE("channel grid covers ideal plus every impairment") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 31);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);

  modfus::SynthSpec synth;
  synth.schemes = {"BPSK", "QPSK"};
  synth.snrs_db = {18.0};
  synth.count_per_scheme_per_snr = 8;
  synth.length = 32;
  Dataset train = modfus::synth_dataset(synth, 47);
  Dataset test = modfus::synth_dataset(synth, 53);

  modfus::HeadHyper hyper;
  hyper.epochs = 5;
  hyper.d = 16;
  Heads heads = modfus::train_head(backbone, train, sched, hyper,
                                   modfus::variant_from_string("single:b8"));

  modfus::ChannelGrid grid;
  grid.rayleigh_sigma2 = {0.6};
  grid.rician_k = {2.0};
  grid.colors = {modfus::NoiseColor::Pink};
  auto conditions = modfus::run_channel_robustness(backbone, heads, test, sched, grid, 59);
  REQUIRE(conditions.size() == 4);
  CHECK(conditions[0].name == "ideal");

  EvalReport direct = modfus::evaluate(backbone, heads, test, sched);
  CHECK(conditions[0].report.accuracy == direct.accuracy);
  CHECK(conditions[0].report.confusion == direct.confusion);

  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    const auto& cond = conditions[ci];
    CHECK(cond.report.accuracy >= 0.0);
    CHECK(cond.report.accuracy <= 1.0);
    CHECK(cond.report.metadata.count("condition") == 1);
    CHECK(cond.report.metadata.at("condition") == cond.name);
    CHECK(cond.report.metadata.count("channel_seed") == (ci == 0 ? 0 : 1));
  }

  modfus::ChannelGrid defaults;
  CHECK(defaults.rayleigh_sigma2.size() + defaults.rician_k.size() + defaults.colors.size() ==
        12);
}

}  // TEST_SUITE
