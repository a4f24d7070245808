#pragma once

#include <functional>
#include <vector>

#include "modfus/rng.hpp"
#include "modfus/schedule.hpp"
#include "modfus/signal.hpp"

namespace modfus {

// Anything that maps (noisy signal, step) to a noise estimate.
using EpsPredictor = std::function<IQSignal(const IQSignal& s_t, int t)>;

struct PosteriorParams {
  IQSignal mean;
  double var = 0.0;
};

// s_t = mu_t * s0 + sigma_t * eps, elementwise over both channels.
IQSignal forward_sample(const IQSignal& s0, int t, const IQSignal& eps,
                        const NoiseSchedule& sched);

// q(s_{t-1} | s_t, s0): mean = ((1 - v_t^2) * mu_{t-1} / sigma_t^2) * s0
//                            + (v_t * sigma_{t-1}^2 / sigma_t^2) * s_t,
// var = (sigma_{t-1}^2 / sigma_t^2) * (1 - v_t^2). At t = 1 the posterior
// collapses to mean = s0, var = 0.
PosteriorParams posterior_params(const IQSignal& s_t, const IQSignal& s0, int t,
                                 const NoiseSchedule& sched);

// s0_hat = (s_t - sigma_t * eps_hat) / mu_t.
IQSignal predict_x0(const IQSignal& s_t, const IQSignal& eps_hat, int t,
                    const NoiseSchedule& sched);

// One ancestral step: posterior mean of the predicted s0 plus
// sqrt(var) * z for t >= 2; deterministic at t = 1.
IQSignal ddpm_step(const IQSignal& s_t, const IQSignal& eps_hat, int t,
                   const NoiseSchedule& sched, Rng& rng);

// Full reverse chain from s_T ~ N(0, I).
IQSignal generate(const EpsPredictor& model, std::size_t length,
                  const NoiseSchedule& sched, Rng& rng);

// Draws (t, eps) per signal, forms s_t, and averages the squared error
// between eps and model(s_t, t) over elements and batch.
double diffusion_loss(const EpsPredictor& model, const std::vector<IQSignal>& batch,
                      const NoiseSchedule& sched, Rng& rng);

IQSignal gaussian_like(std::size_t length, Rng& rng);

}  // namespace modfus
