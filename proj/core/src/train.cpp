#include "modfus/train.hpp"

#include <cmath>
#include <stdexcept>

#include "modfus/errors.hpp"

namespace modfus {

namespace {

// Flat views over every tensor, in for_each_tensor order; params, grads, and
// both moment tables share the layout.
std::vector<std::vector<float>*> tensor_views(UNetParams<float>& p) {
  std::vector<std::vector<float>*> views;
  for_each_tensor(p, [&](const std::string&, const std::vector<int>&, std::vector<float>& data) {
    views.push_back(&data);
  });
  return views;
}

}  // namespace

TrainResult train_diffusion(UNetParams<float>& params, const Dataset& ds,
                            const NoiseSchedule& sched, const TrainHyper& hyper,
                            int start_epoch) {
  validate(ds);
  if (ds.size() == 0) throw std::invalid_argument("train_diffusion: empty dataset");
  if (hyper.batch_size < 1) throw std::invalid_argument("train_diffusion: batch_size < 1");
  if (start_epoch < 0) throw std::invalid_argument("train_diffusion: negative start epoch");

  UNetParams<float> grads = zeros_like(params);
  UNetParams<float> m1 = zeros_like(params);
  UNetParams<float> m2 = zeros_like(params);
  auto p_views = tensor_views(params);
  auto g_views = tensor_views(grads);
  auto m1_views = tensor_views(m1);
  auto m2_views = tensor_views(m2);

  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const Rng base(hyper.seed);
  TrainResult result;
  result.first_epoch = start_epoch;
  std::int64_t step = 0;
  for (int epoch = start_epoch; epoch < hyper.epochs; ++epoch) {
    const auto batches = minibatches(ds.size(), static_cast<std::size_t>(hyper.batch_size),
                                     hyper.seed, static_cast<std::uint64_t>(epoch));
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      Rng rng = base.derive(0x7a11u, static_cast<std::uint64_t>(epoch)).derive(bi);
      std::vector<IQSignal> batch;
      batch.reserve(batches[bi].size());
      for (std::size_t idx : batches[bi]) batch.push_back(ds.signals[idx]);
      const auto examples = make_training_examples<float>(batch, sched, rng);
      const double loss = unet_loss_and_gradients(params, examples, grads);
      if (!std::isfinite(loss)) {
        throw DivergenceError("train_diffusion: non-finite loss at epoch " +
                              std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      seen += batch.size();

      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t v = 0; v < p_views.size(); ++v) {
        auto& p = *p_views[v];
        const auto& g = *g_views[v];
        auto& ma = *m1_views[v];
        auto& vb = *m2_views[v];
        for (std::size_t k = 0; k < p.size(); ++k) {
          ma[k] = static_cast<float>(b1 * ma[k] + (1.0 - b1) * g[k]);
          vb[k] = static_cast<float>(b2 * vb[k] + (1.0 - b2) * static_cast<double>(g[k]) * g[k]);
          const double mhat = ma[k] / c1;
          const double vhat = vb[k] / c2;
          p[k] = static_cast<float>(p[k] - hyper.lr * (mhat / (std::sqrt(vhat) + eps) +
                                                       hyper.weight_decay * p[k]));
        }
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
  }
  return result;
}

}  // namespace modfus
