#pragma once

#include <string>
#include <vector>

namespace modfus {

enum class ScheduleKind { Cosine, LinearBeta };

ScheduleKind schedule_kind_from_string(const std::string& name);
std::string schedule_kind_to_string(ScheduleKind kind);

// Per-step retention v_t, cumulative mu_t = prod_{s<=t} v_s and
// sigma_t = sqrt(1 - mu_t^2). Arrays are 1-indexed; index 0 holds the
// conventions mu_0 = 1, sigma_0 = 0 so posterior formulas degenerate
// cleanly at t = 1.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> v;
  std::vector<double> mu;
  std::vector<double> sigma;
};

// cosine: mu_t = cos(((t/T + s)/(1 + s)) * pi/2) / cos(s*pi/(2*(1+s))) with
// s = 0.008, v_t = mu_t/mu_{t-1} clipped to [0.001, 0.9999] and mu rebuilt
// as the running product of the clipped v. linear_beta: beta_t linear from
// 1e-4 to 0.02, v_t = sqrt(1 - beta_t).
NoiseSchedule build_schedule(ScheduleKind kind, int T);

}  // namespace modfus
