#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "modfus/colored_noise.hpp"
#include "modfus/daffus.hpp"
#include "modfus/dataset.hpp"
#include "modfus/report.hpp"

namespace modfus {

// Accuracy summary for one evaluation or one trial aggregate. Confusion rows
// are true labels, columns predictions; row sums equal per-class test counts
// (summed over trials when aggregated).
struct EvalReport {
  double accuracy = 0.0;      // mean of per_trial when aggregated
  double accuracy_std = 0.0;  // sample std across trials, 0 otherwise
  std::map<double, double> accuracy_by_snr;
  std::vector<std::vector<std::int64_t>> confusion;
  std::vector<double> per_trial;
  std::map<std::string, std::string> metadata;
};

// Flattens a report into CSV rows under one condition label. Per-trial
// accuracies carry their trial index; everything else is an aggregate row.
std::vector<MetricRow> report_rows(const EvalReport& report, const std::string& condition);

// Frozen backbone + trained heads on a test set. Features are extracted
// deterministically at heads.t. Throws on an empty test set.
EvalReport evaluate(const UNetParams<float>& backbone, const Heads& heads, const Dataset& test,
                    const NoiseSchedule& sched);

// Same, on features already extracted at heads.t, parallel to `test`.
EvalReport evaluate_features(const std::vector<FeatureSet>& features, const Heads& heads,
                             const Dataset& test);

struct ProbeSpec {
  SplitSpec split;   // labeled budget per (class, SNR) cell and trial count
  HeadHyper head;    // probe training hyperparameters; head.t selects the step
  VariantSpec variant;
};

// Limited-label protocol: features are extracted once, then each Monte Carlo
// trial draws its own split, trains a fresh head on the labeled part, and
// evaluates on the rest. Aggregates across trials.
EvalReport run_limited_label(const UNetParams<float>& backbone, const Dataset& ds,
                             const NoiseSchedule& sched, const ProbeSpec& spec);

// The same protocol on pre-extracted features (all signals, matching
// spec.head.t); the ablation grid reuses one extraction per t this way.
EvalReport run_limited_label_features(const std::vector<FeatureSet>& features, const Dataset& ds,
                                      const UNetConfig& config, const ProbeSpec& spec);

struct AblationResult {
  std::vector<int> t_values;
  std::vector<VariantSpec> variants;
  std::vector<std::vector<double>> accuracy;  // [t][variant] trial means
};

// Full (t, variant) grid; spec.head.t and spec.variant are overridden per
// cell.
AblationResult run_ablation(const UNetParams<float>& backbone, const Dataset& ds,
                            const NoiseSchedule& sched, const std::vector<int>& t_values,
                            const std::vector<VariantSpec>& variants, const ProbeSpec& spec);

struct VariableLengthResult {
  std::vector<std::size_t> lengths;
  std::vector<EvalReport> reports;                 // one aggregate per length
  std::vector<std::vector<std::size_t>> offsets;   // crop start per [length][signal]
};

// Crops every signal to each length at a seeded offset, then runs the
// limited-label protocol per length. Lengths must be multiples of 16 and fit
// the dataset's signal length.
VariableLengthResult run_variable_length(const UNetParams<float>& backbone, const Dataset& ds,
                                         const NoiseSchedule& sched,
                                         const std::vector<std::size_t>& lengths,
                                         std::uint64_t crop_seed, const ProbeSpec& spec);

// Evaluates heads trained on distribution A against a test set drawn from
// distribution B. Throws when the class sets differ; with test_b drawn from
// A's own config this reduces to evaluate().
EvalReport run_distribution_shift(const UNetParams<float>& backbone, const Heads& heads,
                                  const std::vector<std::string>& class_names_a,
                                  const Dataset& test_b, const NoiseSchedule& sched);

struct ChannelGrid {
  std::vector<double> rayleigh_sigma2{0.6, 0.9, 1.2};
  std::vector<double> rician_k{2.0, 6.0, 10.0, 14.0, 18.0};
  std::vector<NoiseColor> colors{NoiseColor::White, NoiseColor::Pink, NoiseColor::Red,
                                 NoiseColor::Blue};
  double noise_snr_db = 10.0;
};

struct ChannelCondition {
  std::string name;
  EvalReport report;
};

// Applies each channel condition to the test set before evaluation. The
// "ideal" condition leaves signals untouched, so its report equals
// evaluate() exactly; fading and additive-noise draws use per-signal
// substreams of `seed`.
std::vector<ChannelCondition> run_channel_robustness(const UNetParams<float>& backbone,
                                                     const Heads& heads, const Dataset& test,
                                                     const NoiseSchedule& sched,
                                                     const ChannelGrid& grid, std::uint64_t seed);

}  // namespace modfus
