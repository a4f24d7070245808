#include "modfus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "modfus/impairments.hpp"

namespace modfus {

Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.schemes.empty() || spec.snrs_db.empty() || spec.count_per_scheme_per_snr == 0) {
    throw std::invalid_argument("synth_dataset: empty grid");
  }
  if (spec.length == 0) throw std::invalid_argument("synth_dataset: zero length");

  // Canonical scheme names, so case variants collapse to one class.
  std::vector<std::string> class_names;
  for (const auto& name : spec.schemes) {
    class_names.push_back(scheme_to_string(scheme_from_string(name)));
  }
  std::sort(class_names.begin(), class_names.end());
  class_names.erase(std::unique(class_names.begin(), class_names.end()), class_names.end());

  Dataset ds;
  ds.class_names = class_names;
  const Rng base(seed);
  std::uint64_t index = 0;
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const auto scheme = scheme_from_string(class_names[c]);
    for (double snr : spec.snrs_db) {
      for (std::size_t k = 0; k < spec.count_per_scheme_per_snr; ++k, ++index) {
        Rng rng = base.derive(index);
        IQSignal sig = random_modulated_signal(scheme, spec.length, spec.pulse, rng);

        ImpairmentParams p;
        p.tau = spec.impairments.tau_max > 0
                    ? rng.uniform_int(0, spec.impairments.tau_max)
                    : 0;
        p.delta_f_norm = spec.impairments.cfo_max > 0.0
                             ? rng.uniform(-spec.impairments.cfo_max, spec.impairments.cfo_max)
                             : 0.0;
        p.phi = spec.impairments.random_phase ? rng.uniform(0.0, 2.0 * std::numbers::pi) : 0.0;
        p.snr_db = snr;
        sig = apply_impairments(sig, p, rng);
        sig = normalize_power(sig);
        // Datasets persist at float32; quantizing here makes save/load exact.
        for (auto& v : sig.i) v = static_cast<float>(v);
        for (auto& v : sig.q) v = static_cast<float>(v);

        ds.signals.push_back(std::move(sig));
        ds.labels.push_back(static_cast<int>(c));
        ds.snrs.push_back(snr);
      }
    }
  }
  return ds;
}

}  // namespace modfus
