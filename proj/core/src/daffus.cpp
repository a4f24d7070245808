#include "modfus/daffus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "modfus/diffusion.hpp"

namespace modfus {

namespace {

std::array<int, 8> block_channels(const UNetConfig& config) {
  return {config.down_channels[0], config.down_channels[1], config.down_channels[2],
          config.down_channels[3], config.up_channels[0],   config.up_channels[1],
          config.up_channels[2],   config.up_channels[3]};
}

std::vector<int> variant_blocks(const VariantSpec& variant) {
  switch (variant.kind) {
    case FusionVariant::Daffus: return {5, 6, 7, 8};
    case FusionVariant::FusionDown: return {1, 2, 3, 4};
    case FusionVariant::FusionAll: return {1, 2, 3, 4, 5, 6, 7, 8};
    case FusionVariant::Single: return {variant.block};
  }
  throw std::invalid_argument("unknown fusion variant");
}

struct HeadGrads {
  std::vector<double> fusion_w, fusion_b, clf_w, clf_b;
};

// Adam without weight decay; one moment pair per head tensor.
struct AdamState {
  std::vector<double> m, v;
};

void adam_step(std::vector<double>& p, const std::vector<double>& g, AdamState& st, double lr,
               int step) {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, step);
  const double c2 = 1.0 - std::pow(b2, step);
  for (std::size_t k = 0; k < p.size(); ++k) {
    st.m[k] = b1 * st.m[k] + (1.0 - b1) * g[k];
    st.v[k] = b2 * st.v[k] + (1.0 - b2) * g[k] * g[k];
    p[k] -= lr * (st.m[k] / c1) / (std::sqrt(st.v[k] / c2) + eps);
  }
}

void quantize_f32(std::vector<double>& v) {
  for (auto& x : v) x = static_cast<float>(x);
}

}  // namespace

VariantSpec variant_from_string(const std::string& name) {
  if (name == "daffus") return {FusionVariant::Daffus, 0};
  if (name == "fusion_down") return {FusionVariant::FusionDown, 0};
  if (name == "fusion_all") return {FusionVariant::FusionAll, 0};
  if (name.rfind("single:b", 0) == 0 && name.size() == 9) {
    const int b = name[8] - '0';
    if (b >= 1 && b <= 8) return {FusionVariant::Single, b};
  }
  throw std::invalid_argument("unknown fusion variant: " + name);
}

std::string variant_to_string(const VariantSpec& variant) {
  switch (variant.kind) {
    case FusionVariant::Daffus: return "daffus";
    case FusionVariant::FusionDown: return "fusion_down";
    case FusionVariant::FusionAll: return "fusion_all";
    case FusionVariant::Single: return "single:b" + std::to_string(variant.block);
  }
  throw std::invalid_argument("unknown fusion variant");
}

int variant_dim(const UNetConfig& config, const VariantSpec& variant) {
  const auto ch = block_channels(config);
  int dim = 0;
  for (int b : variant_blocks(variant)) {
    if (b < 1 || b > 8) throw std::invalid_argument("variant block out of range");
    dim += ch[b - 1];
  }
  return dim;
}

std::vector<double> concat_features(const FeatureSet& fs, const VariantSpec& variant) {
  std::vector<double> x;
  for (int b : variant_blocks(variant)) {
    const auto& f = fs.f[b - 1];
    x.insert(x.end(), f.begin(), f.end());
  }
  return x;
}

std::vector<double> fuse(const FeatureSet& fs, const FusionHead& head,
                         const VariantSpec& variant) {
  const std::vector<double> x = concat_features(fs, variant);
  if (static_cast<int>(x.size()) != head.d_in) {
    throw std::invalid_argument("fuse: head input dim " + std::to_string(head.d_in) +
                                " does not match variant dim " + std::to_string(x.size()));
  }
  std::vector<double> y(head.d_out);
  for (int o = 0; o < head.d_out; ++o) {
    double acc = head.b[o];
    const double* wrow = &head.w[static_cast<std::size_t>(o) * head.d_in];
    for (int i = 0; i < head.d_in; ++i) acc += wrow[i] * x[i];
    y[o] = std::max(0.0, acc);
  }
  return y;
}

std::vector<double> classify(const std::vector<double>& f_d, const ClassifierHead& clf) {
  if (static_cast<int>(f_d.size()) != clf.d) {
    throw std::invalid_argument("classify: feature dim mismatch");
  }
  std::vector<double> logits(clf.n_classes);
  for (int c = 0; c < clf.n_classes; ++c) {
    double acc = clf.b[c];
    const double* wrow = &clf.w[static_cast<std::size_t>(c) * clf.d];
    for (int i = 0; i < clf.d; ++i) acc += wrow[i] * f_d[i];
    logits[c] = acc;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  std::vector<double> probs(clf.n_classes);
  for (int c = 0; c < clf.n_classes; ++c) {
    probs[c] = std::exp(logits[c] - peak);
    z += probs[c];
  }
  for (auto& p : probs) p /= z;
  return probs;
}

double cross_entropy(const std::vector<double>& probs, int label) {
  if (label < 0 || label >= static_cast<int>(probs.size())) {
    throw std::invalid_argument("cross_entropy: label out of range");
  }
  return -std::log(std::max(probs[label], 1e-12));
}

FeatureSet extract_block_features(const UNetParams<float>& backbone, const IQSignal& sig,
                                  const NoiseSchedule& sched, int t, bool stochastic, Rng& rng) {
  if (t < 1 || t > sched.T) throw std::invalid_argument("extract: step t out of [1, T]");
  IQSignal s_t;
  if (stochastic) {
    const IQSignal eps = gaussian_like(sig.length(), rng);
    s_t = forward_sample(sig, t, eps, sched);
  } else {
    IQSignal zero;
    zero.i.assign(sig.length(), 0.0);
    zero.q.assign(sig.length(), 0.0);
    s_t = forward_sample(sig, t, zero, sched);
  }
  BlockActivations<float> acts;
  unet_forward_capture(backbone, to_tensor<float>(s_t), t, acts);
  FeatureSet fs;
  for (int b = 0; b < 8; ++b) {
    const auto& a = acts[b];
    fs.f[b].assign(a.ch, 0.0);
    for (int c = 0; c < a.ch; ++c) {
      double mean = 0.0;
      for (int n = 0; n < a.len; ++n) mean += a.at(c, n);
      fs.f[b][c] = mean / a.len;
    }
  }
  return fs;
}

std::vector<FeatureSet> extract_features(const UNetParams<float>& backbone,
                                         const std::vector<IQSignal>& sigs,
                                         const NoiseSchedule& sched, int t, bool stochastic,
                                         std::uint64_t seed) {
  std::vector<FeatureSet> out;
  out.reserve(sigs.size());
  const Rng base(seed);
  for (std::size_t k = 0; k < sigs.size(); ++k) {
    Rng rng = base.derive(0xfea7u, k);
    out.push_back(extract_block_features(backbone, sigs[k], sched, t, stochastic, rng));
  }
  return out;
}

Heads train_head_on_features(const std::vector<FeatureSet>& features,
                             const std::vector<int>& labels, int n_classes,
                             const UNetConfig& config, const HeadHyper& hyper,
                             const VariantSpec& variant) {
  if (features.empty()) throw std::invalid_argument("train_head: empty labeled set");
  if (features.size() != labels.size()) {
    throw std::invalid_argument("train_head: features/labels size mismatch");
  }
  if (n_classes < 2) throw std::invalid_argument("train_head: need at least 2 classes");

  const int d_in = variant_dim(config, variant);
  const int d = hyper.d;
  Heads heads;
  heads.variant = variant;
  heads.t = hyper.t;
  heads.fusion.d_in = d_in;
  heads.fusion.d_out = d;
  heads.fusion.w.assign(static_cast<std::size_t>(d) * d_in, 0.0);
  heads.fusion.b.assign(d, 0.0);
  heads.clf.n_classes = n_classes;
  heads.clf.d = d;
  heads.clf.w.assign(static_cast<std::size_t>(n_classes) * d, 0.0);
  heads.clf.b.assign(n_classes, 0.0);

  Rng rng = Rng(hyper.seed).derive(0x4eadu);
  for (auto& w : heads.fusion.w) w = rng.normal() / std::sqrt(static_cast<double>(d_in));
  for (auto& w : heads.clf.w) w = rng.normal() / std::sqrt(static_cast<double>(d));

  // Concatenations are fixed under the frozen backbone; precompute them.
  std::vector<std::vector<double>> xs(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) {
    xs[k] = concat_features(features[k], variant);
  }

  AdamState st_fw{std::vector<double>(heads.fusion.w.size(), 0.0),
                  std::vector<double>(heads.fusion.w.size(), 0.0)};
  AdamState st_fb{std::vector<double>(heads.fusion.b.size(), 0.0),
                  std::vector<double>(heads.fusion.b.size(), 0.0)};
  AdamState st_cw{std::vector<double>(heads.clf.w.size(), 0.0),
                  std::vector<double>(heads.clf.w.size(), 0.0)};
  AdamState st_cb{std::vector<double>(heads.clf.b.size(), 0.0),
                  std::vector<double>(heads.clf.b.size(), 0.0)};

  int step = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double lr =
        0.5 * hyper.lr * (1.0 + std::cos(std::numbers::pi * epoch / hyper.epochs));
    const auto batches =
        minibatches(features.size(), static_cast<std::size_t>(hyper.batch_size), hyper.seed,
                    static_cast<std::uint64_t>(epoch));
    for (const auto& batch : batches) {
      HeadGrads g;
      g.fusion_w.assign(heads.fusion.w.size(), 0.0);
      g.fusion_b.assign(heads.fusion.b.size(), 0.0);
      g.clf_w.assign(heads.clf.w.size(), 0.0);
      g.clf_b.assign(heads.clf.b.size(), 0.0);
      const double inv_bs = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        const auto& x = xs[idx];
        // forward
        std::vector<double> pre(d);
        std::vector<double> f_d(d);
        for (int o = 0; o < d; ++o) {
          double acc = heads.fusion.b[o];
          const double* wrow = &heads.fusion.w[static_cast<std::size_t>(o) * d_in];
          for (int i = 0; i < d_in; ++i) acc += wrow[i] * x[i];
          pre[o] = acc;
          f_d[o] = std::max(0.0, acc);
        }
        const std::vector<double> probs = classify(f_d, heads.clf);
        // backward: d logits = probs - onehot
        std::vector<double> d_fd(d, 0.0);
        for (int c = 0; c < n_classes; ++c) {
          const double dl = (probs[c] - (c == labels[idx] ? 1.0 : 0.0)) * inv_bs;
          g.clf_b[c] += dl;
          double* gw = &g.clf_w[static_cast<std::size_t>(c) * d];
          const double* wrow = &heads.clf.w[static_cast<std::size_t>(c) * d];
          for (int i = 0; i < d; ++i) {
            gw[i] += dl * f_d[i];
            d_fd[i] += wrow[i] * dl;
          }
        }
        for (int o = 0; o < d; ++o) {
          if (pre[o] <= 0.0) continue;
          g.fusion_b[o] += d_fd[o];
          double* gw = &g.fusion_w[static_cast<std::size_t>(o) * d_in];
          for (int i = 0; i < d_in; ++i) gw[i] += d_fd[o] * x[i];
        }
      }
      ++step;
      adam_step(heads.fusion.w, g.fusion_w, st_fw, lr, step);
      adam_step(heads.fusion.b, g.fusion_b, st_fb, lr, step);
      adam_step(heads.clf.w, g.clf_w, st_cw, lr, step);
      adam_step(heads.clf.b, g.clf_b, st_cb, lr, step);
    }
  }
  quantize_f32(heads.fusion.w);
  quantize_f32(heads.fusion.b);
  quantize_f32(heads.clf.w);
  quantize_f32(heads.clf.b);
  return heads;
}

Heads train_head(const UNetParams<float>& backbone, const Dataset& labeled,
                 const NoiseSchedule& sched, const HeadHyper& hyper, const VariantSpec& variant) {
  validate(labeled);
  if (labeled.size() == 0) throw std::invalid_argument("train_head: empty labeled set");
  const auto features = extract_features(backbone, labeled.signals, sched, hyper.t,
                                         hyper.stochastic, hyper.seed);
  return train_head_on_features(features, labeled.labels,
                                static_cast<int>(labeled.class_names.size()), backbone.config,
                                hyper, variant);
}

std::pair<int, std::vector<double>> predict(const UNetParams<float>& backbone, const Heads& heads,
                                            const IQSignal& sig, const NoiseSchedule& sched) {
  Rng rng(0);
  const FeatureSet fs = extract_block_features(backbone, sig, sched, heads.t, false, rng);
  const std::vector<double> probs = classify(fuse(fs, heads.fusion, heads.variant), heads.clf);
  const int label = static_cast<int>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
  return {label, probs};
}

}  // namespace modfus
