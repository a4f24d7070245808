#include "modfus/evalharness.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "modfus/impairments.hpp"

namespace modfus {

namespace {

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

struct Tally {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  std::vector<std::vector<std::int64_t>> confusion;
  std::map<double, std::pair<std::int64_t, std::int64_t>> by_snr;  // correct, total

  explicit Tally(int n_classes)
      : confusion(n_classes, std::vector<std::int64_t>(n_classes, 0)) {}
};

// Classifies ds[indices] from features parallel to ds.
void tally_predictions(const std::vector<FeatureSet>& features, const Heads& heads,
                       const Dataset& ds, const std::vector<std::size_t>& indices, Tally& tally) {
  for (std::size_t k : indices) {
    const auto fused = fuse(features[k], heads.fusion, heads.variant);
    const int pred = argmax(classify(fused, heads.clf));
    const int label = ds.labels[k];
    ++tally.confusion[label][pred];
    auto& cell = tally.by_snr[ds.snrs[k]];
    cell.first += pred == label ? 1 : 0;
    ++cell.second;
    tally.correct += pred == label ? 1 : 0;
    ++tally.total;
  }
}

EvalReport report_from_tally(const Tally& tally, const Heads& heads) {
  EvalReport r;
  r.accuracy = static_cast<double>(tally.correct) / static_cast<double>(tally.total);
  for (const auto& [snr, cell] : tally.by_snr) {
    r.accuracy_by_snr[snr] = static_cast<double>(cell.first) / static_cast<double>(cell.second);
  }
  r.confusion = tally.confusion;
  r.metadata["variant"] = variant_to_string(heads.variant);
  r.metadata["t"] = std::to_string(heads.t);
  return r;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<MetricRow> report_rows(const EvalReport& report, const std::string& condition) {
  std::vector<MetricRow> rows;
  rows.push_back({condition, -1, "accuracy", report.accuracy});
  rows.push_back({condition, -1, "accuracy_std", report.accuracy_std});
  for (std::size_t k = 0; k < report.per_trial.size(); ++k) {
    rows.push_back({condition, static_cast<int>(k), "accuracy", report.per_trial[k]});
  }
  for (const auto& [snr, acc] : report.accuracy_by_snr) {
    rows.push_back({condition, -1, "accuracy_snr=" + format_double(snr), acc});
  }
  for (std::size_t i = 0; i < report.confusion.size(); ++i) {
    for (std::size_t j = 0; j < report.confusion[i].size(); ++j) {
      rows.push_back({condition, -1,
                      "confusion[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                      static_cast<double>(report.confusion[i][j])});
    }
  }
  return rows;
}

EvalReport evaluate_features(const std::vector<FeatureSet>& features, const Heads& heads,
                             const Dataset& test) {
  validate(test);
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  if (features.size() != test.size()) {
    throw std::invalid_argument("evaluate: feature/test size mismatch");
  }
  const int n_classes = static_cast<int>(test.class_names.size());
  if (heads.clf.n_classes != n_classes) {
    throw std::invalid_argument("evaluate: classifier/class count mismatch");
  }
  Tally tally(n_classes);
  tally_predictions(features, heads, test, all_indices(test.size()), tally);
  return report_from_tally(tally, heads);
}

EvalReport evaluate(const UNetParams<float>& backbone, const Heads& heads, const Dataset& test,
                    const NoiseSchedule& sched) {
  validate(test);
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  const auto features = extract_features(backbone, test.signals, sched, heads.t, false, 0);
  return evaluate_features(features, heads, test);
}

EvalReport run_limited_label_features(const std::vector<FeatureSet>& features, const Dataset& ds,
                                      const UNetConfig& config, const ProbeSpec& spec) {
  validate(ds);
  if (features.size() != ds.size()) {
    throw std::invalid_argument("run_limited_label: feature/dataset size mismatch");
  }
  if (spec.split.trials < 1) throw std::invalid_argument("run_limited_label: trials < 1");
  const int n_classes = static_cast<int>(ds.class_names.size());

  EvalReport agg;
  Tally tally(n_classes);
  const Rng head_base(spec.head.seed);
  for (int trial = 0; trial < spec.split.trials; ++trial) {
    const LabeledSplit split = split_limited_label(ds, spec.split, trial);

    std::vector<FeatureSet> lab_features;
    std::vector<int> lab_labels;
    lab_features.reserve(split.labeled.size());
    lab_labels.reserve(split.labeled.size());
    for (std::size_t k : split.labeled) {
      lab_features.push_back(features[k]);
      lab_labels.push_back(ds.labels[k]);
    }

    HeadHyper hyper = spec.head;
    hyper.seed = head_base.derive(0x7ea15u, static_cast<std::uint64_t>(trial)).seed();
    const Heads heads =
        train_head_on_features(lab_features, lab_labels, n_classes, config, hyper, spec.variant);

    Tally trial_tally(n_classes);
    tally_predictions(features, heads, ds, split.test, trial_tally);
    agg.per_trial.push_back(static_cast<double>(trial_tally.correct) /
                            static_cast<double>(trial_tally.total));

    tally.correct += trial_tally.correct;
    tally.total += trial_tally.total;
    for (int i = 0; i < n_classes; ++i) {
      for (int j = 0; j < n_classes; ++j) tally.confusion[i][j] += trial_tally.confusion[i][j];
    }
    for (const auto& [snr, cell] : trial_tally.by_snr) {
      tally.by_snr[snr].first += cell.first;
      tally.by_snr[snr].second += cell.second;
    }
  }

  agg.accuracy =
      std::accumulate(agg.per_trial.begin(), agg.per_trial.end(), 0.0) /
      static_cast<double>(agg.per_trial.size());
  agg.accuracy_std = sample_std(agg.per_trial, agg.accuracy);
  agg.confusion = tally.confusion;
  for (const auto& [snr, cell] : tally.by_snr) {
    agg.accuracy_by_snr[snr] = static_cast<double>(cell.first) / static_cast<double>(cell.second);
  }
  agg.metadata["variant"] = variant_to_string(spec.variant);
  agg.metadata["t"] = std::to_string(spec.head.t);
  agg.metadata["n_per_type_per_snr"] = std::to_string(spec.split.n_per_type_per_snr);
  agg.metadata["trials"] = std::to_string(spec.split.trials);
  agg.metadata["split_seed"] = std::to_string(spec.split.seed);
  agg.metadata["head_seed"] = std::to_string(spec.head.seed);
  return agg;
}

EvalReport run_limited_label(const UNetParams<float>& backbone, const Dataset& ds,
                             const NoiseSchedule& sched, const ProbeSpec& spec) {
  validate(ds);
  const auto features = extract_features(backbone, ds.signals, sched, spec.head.t,
                                         spec.head.stochastic, spec.head.seed);
  return run_limited_label_features(features, ds, backbone.config, spec);
}

AblationResult run_ablation(const UNetParams<float>& backbone, const Dataset& ds,
                            const NoiseSchedule& sched, const std::vector<int>& t_values,
                            const std::vector<VariantSpec>& variants, const ProbeSpec& spec) {
  if (t_values.empty() || variants.empty()) {
    throw std::invalid_argument("run_ablation: empty grid axis");
  }
  AblationResult result;
  result.t_values = t_values;
  result.variants = variants;
  result.accuracy.assign(t_values.size(), std::vector<double>(variants.size(), 0.0));
  for (std::size_t ti = 0; ti < t_values.size(); ++ti) {
    const auto features = extract_features(backbone, ds.signals, sched, t_values[ti],
                                           spec.head.stochastic, spec.head.seed);
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      ProbeSpec cell = spec;
      cell.head.t = t_values[ti];
      cell.variant = variants[vi];
      const EvalReport r = run_limited_label_features(features, ds, backbone.config, cell);
      result.accuracy[ti][vi] = r.accuracy;
    }
  }
  return result;
}

VariableLengthResult run_variable_length(const UNetParams<float>& backbone, const Dataset& ds,
                                         const NoiseSchedule& sched,
                                         const std::vector<std::size_t>& lengths,
                                         std::uint64_t crop_seed, const ProbeSpec& spec) {
  validate(ds);
  if (lengths.empty()) throw std::invalid_argument("run_variable_length: no lengths");
  const std::size_t full = ds.signal_length();
  for (std::size_t len : lengths) {
    if (len == 0 || len % kUNetLengthMultiple != 0) {
      throw std::invalid_argument("run_variable_length: length must be a positive multiple of " +
                                  std::to_string(kUNetLengthMultiple));
    }
    if (len > full) {
      throw std::invalid_argument("run_variable_length: length exceeds dataset signals");
    }
  }

  VariableLengthResult result;
  result.lengths = lengths;
  const Rng base(crop_seed);
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    const std::size_t len = lengths[li];
    Dataset cropped = ds;
    std::vector<std::size_t> offsets(ds.size(), 0);
    for (std::size_t k = 0; k < ds.size(); ++k) {
      const std::size_t max_off = full - len;
      if (max_off > 0) {
        Rng rng = base.derive(0xc409u, li).derive(k);
        offsets[k] = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(max_off)));
      }
      cropped.signals[k] = crop(ds.signals[k], len, offsets[k]);
    }
    EvalReport r = run_limited_label(backbone, cropped, sched, spec);
    r.metadata["length"] = std::to_string(len);
    r.metadata["crop_seed"] = std::to_string(crop_seed);
    result.reports.push_back(std::move(r));
    result.offsets.push_back(std::move(offsets));
  }
  return result;
}

EvalReport run_distribution_shift(const UNetParams<float>& backbone, const Heads& heads,
                                  const std::vector<std::string>& class_names_a,
                                  const Dataset& test_b, const NoiseSchedule& sched) {
  if (class_names_a != test_b.class_names) {
    throw std::invalid_argument("run_distribution_shift: class sets differ");
  }
  return evaluate(backbone, heads, test_b, sched);
}

std::vector<ChannelCondition> run_channel_robustness(const UNetParams<float>& backbone,
                                                     const Heads& heads, const Dataset& test,
                                                     const NoiseSchedule& sched,
                                                     const ChannelGrid& grid, std::uint64_t seed) {
  validate(test);
  if (test.size() == 0) throw std::invalid_argument("run_channel_robustness: empty test set");

  // Per-signal transform under a (condition, signal)-derived stream. The
  // magnitude of a fade is kept: renormalizing a flat fade would cancel |h|
  // and collapse every sigma^2 onto the same phase-only condition.
  struct Condition {
    std::string name;
    std::function<IQSignal(const IQSignal&, Rng&)> transform;  // null = identity
    std::string extra_key, extra_value;
  };
  std::vector<Condition> conditions;
  conditions.push_back({"ideal", nullptr, "", ""});
  for (double s2 : grid.rayleigh_sigma2) {
    conditions.push_back({"rayleigh_s2=" + format_double(s2),
                          [s2](const IQSignal& s, Rng& r) { return rayleigh_fade(s, s2, r); },
                          "rayleigh_sigma2", format_double(s2)});
  }
  for (double k : grid.rician_k) {
    conditions.push_back({"rician_k=" + format_double(k),
                          [k](const IQSignal& s, Rng& r) { return rician_fade(s, k, r); },
                          "rician_k", format_double(k)});
  }
  for (NoiseColor color : grid.colors) {
    const double snr = grid.noise_snr_db;
    conditions.push_back(
        {"noise_" + noise_color_to_string(color),
         [color, snr](const IQSignal& s, Rng& r) { return add_colored_noise(s, color, snr, r); },
         "noise_snr_db", format_double(snr)});
  }

  const Rng base(seed);
  std::vector<ChannelCondition> out;
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    const auto& cond = conditions[ci];
    EvalReport r;
    if (!cond.transform) {
      r = evaluate(backbone, heads, test, sched);
    } else {
      Dataset shifted = test;
      for (std::size_t k = 0; k < test.size(); ++k) {
        Rng rng = base.derive(0xc4a27u, ci).derive(k);
        shifted.signals[k] = cond.transform(test.signals[k], rng);
      }
      r = evaluate(backbone, heads, shifted, sched);
      r.metadata["channel_seed"] = std::to_string(seed);
    }
    r.metadata["condition"] = cond.name;
    if (!cond.extra_key.empty()) r.metadata[cond.extra_key] = cond.extra_value;
    out.push_back({cond.name, std::move(r)});
  }
  return out;
}

}  // namespace modfus
