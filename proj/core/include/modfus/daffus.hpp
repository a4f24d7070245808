#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "modfus/dataset.hpp"
#include "modfus/schedule.hpp"
#include "modfus/unet.hpp"

namespace modfus {

// Temporal mean of each block's activation map; f[i] has block i+1's channel
// count.
struct FeatureSet {
  std::array<std::vector<double>, 8> f;
};

enum class FusionVariant { Daffus, FusionDown, FusionAll, Single };

struct VariantSpec {
  FusionVariant kind = FusionVariant::Daffus;
  int block = 0;  // 1..8, Single only
};

// Accepts "daffus", "fusion_down", "fusion_all", "single:b1".."single:b8".
VariantSpec variant_from_string(const std::string& name);
std::string variant_to_string(const VariantSpec& variant);

// Concatenated feature width: daffus = b5..b8, fusion_down = b1..b4,
// fusion_all = b1..b8, single = one block.
int variant_dim(const UNetConfig& config, const VariantSpec& variant);

std::vector<double> concat_features(const FeatureSet& fs, const VariantSpec& variant);

struct FusionHead {
  int d_in = 0, d_out = 0;
  std::vector<double> w;  // [d_out][d_in]
  std::vector<double> b;  // [d_out]
};

struct ClassifierHead {
  int n_classes = 0, d = 0;
  std::vector<double> w;  // [n_classes][d]
  std::vector<double> b;  // [n_classes]
};

struct Heads {
  VariantSpec variant;
  int t = 1;  // diffusion step the features are extracted at
  FusionHead fusion;
  ClassifierHead clf;
};

// F_D = max(0, W x + b) on the variant's concatenation.
std::vector<double> fuse(const FeatureSet& fs, const FusionHead& head,
                         const VariantSpec& variant);

// softmax(W_cls f + b_cls).
std::vector<double> classify(const std::vector<double>& f_d, const ClassifierHead& clf);

// -log p[label], probabilities clamped at 1e-12.
double cross_entropy(const std::vector<double>& probs, int label);

// Builds s_t from the signal (eps = 0 when deterministic), runs the backbone
// with capture, and mean-pools every block over its temporal axis.
FeatureSet extract_block_features(const UNetParams<float>& backbone, const IQSignal& sig,
                                  const NoiseSchedule& sched, int t, bool stochastic, Rng& rng);

// Per-signal substreams derived from seed; deterministic extraction ignores
// them.
std::vector<FeatureSet> extract_features(const UNetParams<float>& backbone,
                                         const std::vector<IQSignal>& sigs,
                                         const NoiseSchedule& sched, int t, bool stochastic,
                                         std::uint64_t seed);

struct HeadHyper {
  int epochs = 50;
  double lr = 0.01;  // cosine-annealed to 0
  int batch_size = 32;
  std::uint64_t seed = 0;
  int t = 1;
  bool stochastic = false;
  int d = 128;  // fused feature dimension
};

// Linear probe on frozen features: fusion + classifier trained jointly with
// adaptive moments and a cosine-annealed learning rate. Head weights are
// quantized to float32 so checkpoints round-trip exactly.
Heads train_head_on_features(const std::vector<FeatureSet>& features,
                             const std::vector<int>& labels, int n_classes,
                             const UNetConfig& config, const HeadHyper& hyper,
                             const VariantSpec& variant);

// Extracts features from the frozen backbone, then trains the heads. The
// backbone is read-only throughout.
Heads train_head(const UNetParams<float>& backbone, const Dataset& labeled,
                 const NoiseSchedule& sched, const HeadHyper& hyper, const VariantSpec& variant);

std::pair<int, std::vector<double>> predict(const UNetParams<float>& backbone, const Heads& heads,
                                            const IQSignal& sig, const NoiseSchedule& sched);

}  // namespace modfus
