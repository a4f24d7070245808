#include "modfus/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace modfus {

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "cosine") return ScheduleKind::Cosine;
  if (name == "linear_beta") return ScheduleKind::LinearBeta;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

std::string schedule_kind_to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::LinearBeta: return "linear_beta";
  }
  throw std::invalid_argument("unknown schedule kind");
}

NoiseSchedule build_schedule(ScheduleKind kind, int T) {
  if (T < 2) throw std::invalid_argument("build_schedule: T must be >= 2");

  NoiseSchedule sched;
  sched.T = T;
  sched.v.assign(T + 1, 1.0);
  sched.mu.assign(T + 1, 1.0);
  sched.sigma.assign(T + 1, 0.0);

  if (kind == ScheduleKind::Cosine) {
    const double s = 0.008;
    const double denom = std::cos(s * std::numbers::pi / (2.0 * (1.0 + s)));
    auto mu_raw = [&](int t) {
      const double arg = ((static_cast<double>(t) / T + s) / (1.0 + s)) * std::numbers::pi / 2.0;
      return std::cos(arg) / denom;
    };
    for (int t = 1; t <= T; ++t) {
      const double ratio = mu_raw(t) / mu_raw(t - 1);
      sched.v[t] = std::clamp(ratio, 0.001, 0.9999);
    }
  } else {
    const double beta_lo = 1e-4;
    const double beta_hi = 0.02;
    for (int t = 1; t <= T; ++t) {
      const double beta = beta_lo + (beta_hi - beta_lo) * (t - 1.0) / (T - 1.0);
      sched.v[t] = std::sqrt(1.0 - beta);
    }
  }

  for (int t = 1; t <= T; ++t) {
    sched.mu[t] = sched.mu[t - 1] * sched.v[t];
    sched.sigma[t] = std::sqrt(1.0 - sched.mu[t] * sched.mu[t]);
  }
  return sched;
}

}  // namespace modfus
