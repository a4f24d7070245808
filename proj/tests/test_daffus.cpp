#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "modfus/checkpoint.hpp"
#include "modfus/daffus.hpp"
#include "modfus/diffusion.hpp"
#include "modfus/schedule.hpp"
#include "modfus/synth.hpp"
#include "modfus/unet.hpp"

using modfus::FeatureSet;
using modfus::HeadHyper;
using modfus::IQSignal;
using modfus::NoiseSchedule;
using modfus::Rng;
using modfus::UNetConfig;
using modfus::VariantSpec;

namespace {

UNetConfig tiny_config() {
  UNetConfig config;
  config.down_channels = {4, 6, 8, 10};
  config.up_channels = {8, 6, 4, 4};
  config.time_dim = 8;
  config.norm_groups = 2;
  return config;
}

IQSignal unit_random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  IQSignal sig(n);
  for (std::size_t k = 0; k < n; ++k) {
    sig.i[k] = rng.normal();
    sig.q[k] = rng.normal();
  }
  return modfus::normalize_power(sig);
}

}  // namespace

TEST_SUITE("daffus") {

TEST_CASE("variant names round-trip and dimension bookkeeping holds") {
  UNetConfig config;  // default widths
  struct Case {
    const char* name;
    int dim;
  };
  const Case cases[] = {
      {"daffus", 64 + 32 + 16 + 16},
      {"fusion_down", 16 + 32 + 64 + 128},
      {"fusion_all", 368},
      {"single:b1", 16},
      {"single:b3", 64},
      {"single:b5", 64},
      {"single:b8", 16},
  };
  for (const auto& c : cases) {
    VariantSpec v = modfus::variant_from_string(c.name);
    CHECK(modfus::variant_to_string(v) == c.name);
    CHECK(modfus::variant_dim(config, v) == c.dim);
  }
  CHECK(modfus::variant_dim(config, modfus::variant_from_string("daffus")) == 128);
  CHECK_THROWS_AS(modfus::variant_from_string("single:b9"), std::invalid_argument);
  CHECK_THROWS_AS(modfus::variant_from_string("everything"), std::invalid_argument);
}

TEST_CASE("deterministic extraction is bit-stable and matches direct pooling") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 3);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  IQSignal sig = unit_random_signal(32, 4);

  Rng unused(0);
  FeatureSet fa = modfus::extract_block_features(backbone, sig, sched, 1, false, unused);
  FeatureSet fb = modfus::extract_block_features(backbone, sig, sched, 1, false, unused);
  for (int b = 0; b < 8; ++b) CHECK(fa.f[b] == fb.f[b]);

  // Independent pooling: rebuild s_1 with eps = 0, capture, average rows.
  IQSignal eps(sig.length());
  IQSignal s1 = modfus::forward_sample(sig, 1, eps, sched);
  modfus::BlockActivations<float> acts;
  modfus::unet_forward_capture(backbone, modfus::to_tensor<float>(s1), 1, acts);
  for (int b = 0; b < 8; ++b) {
    REQUIRE(fa.f[b].size() == static_cast<std::size_t>(acts[b].ch));
    for (int c = 0; c < acts[b].ch; ++c) {
      double mean = 0.0;
      for (int n = 0; n < acts[b].len; ++n) mean += static_cast<double>(acts[b].at(c, n));
      mean /= acts[b].len;
      CHECK(fa.f[b][c] == doctest::Approx(mean).epsilon(1e-9));
    }
  }
}

TEST_CASE("stochastic extraction responds to the stream") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 3);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);
  IQSignal sig = unit_random_signal(32, 4);

  Rng ra(5), rb(5), rc(6);
  FeatureSet fa = modfus::extract_block_features(backbone, sig, sched, 5, true, ra);
  FeatureSet fb = modfus::extract_block_features(backbone, sig, sched, 5, true, rb);
  FeatureSet fc = modfus::extract_block_features(backbone, sig, sched, 5, true, rc);
  CHECK(fa.f[7] == fb.f[7]);
  CHECK(fa.f[7] != fc.f[7]);
}

TEST_CASE("identity fusion head is transparent on non-negative input") {
  UNetConfig config;
  VariantSpec variant = modfus::variant_from_string("single:b8");
  const int dim = modfus::variant_dim(config, variant);

  FeatureSet fs;
  for (int b = 0; b < 8; ++b) fs.f[b].assign(16, 0.0);
  for (int k = 0; k < dim; ++k) fs.f[7][k] = 0.25 * k;  // non-negative ramp

  modfus::FusionHead head;
  head.d_in = dim;
  head.d_out = dim;
  head.w.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  head.b.assign(dim, 0.0);
  for (int k = 0; k < dim; ++k) head.w[static_cast<std::size_t>(k) * dim + k] = 1.0;

  auto out = modfus::fuse(fs, head, variant);
  REQUIRE(out.size() == static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) CHECK(out[k] == fs.f[7][k]);

  // The rectifier clamps negatives to zero.
  fs.f[7][2] = -5.0;
  auto clamped = modfus::fuse(fs, head, variant);
  CHECK(clamped[2] == 0.0);

  modfus::FusionHead wrong = head;
  wrong.d_in = dim + 1;
  CHECK_THROWS_AS(modfus::fuse(fs, wrong, variant), std::invalid_argument);
}

TEST_CASE("daffus fusion reads only the up-path blocks") {
  FeatureSet fs;
  const int widths[8] = {16, 32, 64, 128, 64, 32, 16, 16};
  for (int b = 0; b < 8; ++b) {
    fs.f[b].assign(widths[b], 0.5);
  }
  VariantSpec daffus = modfus::variant_from_string("daffus");
  auto base = modfus::concat_features(fs, daffus);
  for (int b = 0; b < 4; ++b) {
    for (auto& v : fs.f[b]) v = -99.0;
  }
  CHECK(modfus::concat_features(fs, daffus) == base);
}

TEST_CASE("classifier with zero weights is uniform") {
  modfus::ClassifierHead clf;
  clf.n_classes = 4;
  clf.d = 8;
  clf.w.assign(32, 0.0);
  clf.b.assign(4, 0.0);
  std::vector<double> f(8, 0.3);
  auto probs = modfus::classify(f, clf);
  REQUIRE(probs.size() == 4);
  for (double p : probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("probabilities sum to one and ignore logit shifts") {
  Rng rng(7);
  modfus::ClassifierHead clf;
  clf.n_classes = 5;
  clf.d = 6;
  clf.w.resize(30);
  clf.b.resize(5);
  for (auto& v : clf.w) v = rng.normal();
  for (auto& v : clf.b) v = rng.normal();
  std::vector<double> f(6);
  for (auto& v : f) v = rng.normal();

  auto probs = modfus::classify(f, clf);
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(std::abs(total - 1.0) < 1e-6);

  modfus::ClassifierHead shifted = clf;
  for (auto& v : shifted.b) v += 7.25;
  auto probs2 = modfus::classify(f, shifted);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    CHECK(probs2[k] == doctest::Approx(probs[k]).epsilon(1e-9));
  }
}

TEST_CASE("cross entropy hits its analytic anchors") {
  std::vector<double> perfect = {0.0, 1.0, 0.0};
  CHECK(modfus::cross_entropy(perfect, 1) == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<double> uniform(11, 1.0 / 11.0);
  CHECK(modfus::cross_entropy(uniform, 3) ==
        doctest::Approx(2.3978952727983707).epsilon(1e-12));

  // Clamp keeps the zero-probability case finite.
  std::vector<double> zero = {1.0, 0.0};
  CHECK(modfus::cross_entropy(zero, 1) > 0.0);
  CHECK(std::isfinite(modfus::cross_entropy(zero, 1)));
}

TEST_CASE("linear probe separates two gaussian blobs") {
  // Margin 5 sigma in every coordinate of b8; chance would be 0.5.
  UNetConfig config;
  VariantSpec variant = modfus::variant_from_string("single:b8");
  const int dim = modfus::variant_dim(config, variant);

  Rng rng(9);
  std::vector<FeatureSet> features;
  std::vector<int> labels;
  for (int k = 0; k < 80; ++k) {
    const int label = k % 2;
    FeatureSet fs;
    for (int b = 0; b < 8; ++b) fs.f[b].assign(16, 0.0);
    for (int d = 0; d < dim; ++d) {
      fs.f[7][d] = (label == 0 ? 2.5 : -2.5) + rng.normal();
    }
    features.push_back(fs);
    labels.push_back(label);
  }

  HeadHyper hyper;
  hyper.epochs = 50;
  hyper.d = 16;
  hyper.seed = 10;
  auto heads = modfus::train_head_on_features(features, labels, 2, config, hyper, variant);

  int correct = 0;
  for (std::size_t k = 0; k < features.size(); ++k) {
    auto probs = modfus::classify(modfus::fuse(features[k], heads.fusion, variant), heads.clf);
    int arg = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
      if (probs[c] > probs[arg]) arg = static_cast<int>(c);
    }
    correct += (arg == labels[k]);
  }
  CHECK(correct == 80);

  // Head weights live in float32 so checkpoints round-trip losslessly.
  for (double w : heads.fusion.w) CHECK(static_cast<double>(static_cast<float>(w)) == w);
  for (double w : heads.clf.w) CHECK(static_cast<double>(static_cast<float>(w)) == w);
}

TEST_CASE("head training leaves the backbone byte-identical") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 11);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);

  modfus::SynthSpec spec;
  spec.schemes = {"BPSK", "QPSK"};
  spec.snrs_db = {18.0};
  spec.count_per_scheme_per_snr = 6;
  spec.length = 32;
  modfus::Dataset labeled = modfus::synth_dataset(spec, 12);

  const std::string before = testutil::path_in_scratch("backbone_before.mfck");
  const std::string after = testutil::path_in_scratch("backbone_after.mfck");
  modfus::save_checkpoint({backbone, 0, modfus::ScheduleKind::Cosine, 10, {}, {}}, before);

  HeadHyper hyper;
  hyper.epochs = 10;
  hyper.d = 16;
  auto heads = modfus::train_head(backbone, labeled, sched, hyper,
                                  modfus::variant_from_string("daffus"));
  CHECK(heads.fusion.d_out == 16);

  modfus::save_checkpoint({backbone, 0, modfus::ScheduleKind::Cosine, 10, {}, {}}, after);
  CHECK(testutil::slurp(before) == testutil::slurp(after));

  CHECK_THROWS_AS(
      modfus::train_head(backbone, modfus::Dataset{}, sched, hyper, heads.variant),
      std::invalid_argument);
}

TEST_CASE("predict is stable across calls") {
  UNetConfig config = tiny_config();
  auto backbone = modfus::unet_init<float>(config, 13);
  NoiseSchedule sched = modfus::build_schedule(modfus::ScheduleKind::Cosine, 10);

  modfus::SynthSpec spec;
  spec.schemes = {"BPSK", "QPSK"};
  spec.snrs_db = {18.0};
  spec.count_per_scheme_per_snr = 4;
  spec.length = 32;
  modfus::Dataset labeled = modfus::synth_dataset(spec, 14);

  HeadHyper hyper;
  hyper.epochs = 5;
  hyper.d = 16;
  auto heads = modfus::train_head(backbone, labeled, sched, hyper,
                                  modfus::variant_from_string("daffus"));

  auto [label_a, probs_a] = modfus::predict(backbone, heads, labeled.signals[0], sched);
  auto [label_b, probs_b] = modfus::predict(backbone, heads, labeled.signals[0], sched);
  CHECK(label_a == label_b);
  CHECK(probs_a == probs_b);
  CHECK(label_a >= 0);
  CHECK(label_a < 2);
  CHECK(probs_a.size() == 2);
}

}  // TEST_SUITE
