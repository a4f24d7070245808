#include "modfus/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace modfus {

namespace {

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T) throw std::invalid_argument("diffusion: step t out of [1, T]");
}

void check_shapes(const IQSignal& a, const IQSignal& b) {
  if (a.length() != b.length()) throw std::invalid_argument("diffusion: shape mismatch");
}

}  // namespace

IQSignal gaussian_like(std::size_t length, Rng& rng) {
  IQSignal out;
  out.i.resize(length);
  out.q.resize(length);
  for (auto& v : out.i) v = rng.normal();
  for (auto& v : out.q) v = rng.normal();
  return out;
}

IQSignal forward_sample(const IQSignal& s0, int t, const IQSignal& eps,
                        const NoiseSchedule& sched) {
  check_step(t, sched);
  check_shapes(s0, eps);
  const double mu = sched.mu[t];
  const double sigma = sched.sigma[t];
  IQSignal out;
  out.i.resize(s0.length());
  out.q.resize(s0.length());
  for (std::size_t k = 0; k < s0.length(); ++k) {
    out.i[k] = mu * s0.i[k] + sigma * eps.i[k];
    out.q[k] = mu * s0.q[k] + sigma * eps.q[k];
  }
  return out;
}

PosteriorParams posterior_params(const IQSignal& s_t, const IQSignal& s0, int t,
                                 const NoiseSchedule& sched) {
  check_step(t, sched);
  check_shapes(s_t, s0);
  PosteriorParams out;
  if (t == 1) {
    out.mean = s0;
    out.var = 0.0;
    return out;
  }
  const double v = sched.v[t];
  const double sig_t2 = sched.sigma[t] * sched.sigma[t];
  const double sig_p2 = sched.sigma[t - 1] * sched.sigma[t - 1];
  const double c0 = (1.0 - v * v) * sched.mu[t - 1] / sig_t2;
  const double ct = v * sig_p2 / sig_t2;
  out.var = sig_p2 / sig_t2 * (1.0 - v * v);
  out.mean.i.resize(s_t.length());
  out.mean.q.resize(s_t.length());
  for (std::size_t k = 0; k < s_t.length(); ++k) {
    out.mean.i[k] = c0 * s0.i[k] + ct * s_t.i[k];
    out.mean.q[k] = c0 * s0.q[k] + ct * s_t.q[k];
  }
  return out;
}

IQSignal predict_x0(const IQSignal& s_t, const IQSignal& eps_hat, int t,
                    const NoiseSchedule& sched) {
  check_step(t, sched);
  check_shapes(s_t, eps_hat);
  const double mu = sched.mu[t];
  const double sigma = sched.sigma[t];
  IQSignal out;
  out.i.resize(s_t.length());
  out.q.resize(s_t.length());
  for (std::size_t k = 0; k < s_t.length(); ++k) {
    out.i[k] = (s_t.i[k] - sigma * eps_hat.i[k]) / mu;
    out.q[k] = (s_t.q[k] - sigma * eps_hat.q[k]) / mu;
  }
  return out;
}

IQSignal ddpm_step(const IQSignal& s_t, const IQSignal& eps_hat, int t,
                   const NoiseSchedule& sched, Rng& rng) {
  const IQSignal s0_hat = predict_x0(s_t, eps_hat, t, sched);
  PosteriorParams post = posterior_params(s_t, s0_hat, t, sched);
  if (t == 1) return post.mean;
  const double stddev = std::sqrt(post.var);
  for (std::size_t k = 0; k < post.mean.length(); ++k) {
    post.mean.i[k] += stddev * rng.normal();
    post.mean.q[k] += stddev * rng.normal();
  }
  return post.mean;
}

IQSignal generate(const EpsPredictor& model, std::size_t length,
                  const NoiseSchedule& sched, Rng& rng) {
  IQSignal s = gaussian_like(length, rng);
  for (int t = sched.T; t >= 1; --t) {
    s = ddpm_step(s, model(s, t), t, sched, rng);
  }
  return s;
}

double diffusion_loss(const EpsPredictor& model, const std::vector<IQSignal>& batch,
                      const NoiseSchedule& sched, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("diffusion_loss: empty batch");
  double total = 0.0;
  for (const auto& s0 : batch) {
    const int t = static_cast<int>(rng.uniform_int(1, sched.T));
    const IQSignal eps = gaussian_like(s0.length(), rng);
    const IQSignal s_t = forward_sample(s0, t, eps, sched);
    const IQSignal eps_hat = model(s_t, t);
    check_shapes(eps, eps_hat);
    double acc = 0.0;
    for (std::size_t k = 0; k < s0.length(); ++k) {
      const double di = eps.i[k] - eps_hat.i[k];
      const double dq = eps.q[k] - eps_hat.q[k];
      acc += di * di + dq * dq;
    }
    total += acc / (2.0 * static_cast<double>(s0.length()));
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace modfus
