#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "modfus/rng.hpp"
#include "modfus/schedule.hpp"
#include "modfus/signal.hpp"

namespace modfus {

struct UNetConfig {
  std::array<int, 4> down_channels{16, 32, 64, 128};
  std::array<int, 4> up_channels{64, 32, 16, 16};
  int in_channels = 2;
  int kernel_size = 3;
  int time_dim = 64;
  int norm_groups = 8;

  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

// Throws std::invalid_argument on degenerate widths, even kernel, or odd
// time dimension.
void validate(const UNetConfig& config);

// Input length must be a positive multiple of this (four stride-2 stages).
constexpr int kUNetLengthMultiple = 16;

template <typename T>
struct Tensor {
  int ch = 0;
  int len = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int l) : ch(c), len(l), data(static_cast<std::size_t>(c) * l, T(0)) {}
  T& at(int c, int n) { return data[static_cast<std::size_t>(c) * len + n]; }
  const T& at(int c, int n) const { return data[static_cast<std::size_t>(c) * len + n]; }
};

template <typename T>
Tensor<T> to_tensor(const IQSignal& sig);
template <typename T>
IQSignal to_signal(const Tensor<T>& x);

template <typename T>
struct ConvParams {
  int c_out = 0, c_in = 0, k = 0, stride = 1;
  std::vector<T> w;  // [c_out][c_in][k]
  std::vector<T> b;  // [c_out]
};

template <typename T>
struct LinearParams {
  int n_out = 0, n_in = 0;
  std::vector<T> w;  // [n_out][n_in]
  std::vector<T> b;  // [n_out]
};

template <typename T>
struct NormParams {
  int c = 0, groups = 1;
  std::vector<T> gamma, beta;  // [c]
};

// conv1 -> norm1 -> time-conditioned scale/shift -> gate -> conv2 -> norm2
// -> gate, plus a residual add (1x1 conv when channel counts differ).
template <typename T>
struct ResBlockParams {
  ConvParams<T> conv1;
  NormParams<T> norm1;
  LinearParams<T> film;  // time_dim -> 2 * c_out (scale, then shift)
  ConvParams<T> conv2;
  NormParams<T> norm2;
  ConvParams<T> res;
  bool has_res = false;
};

template <typename T>
struct UNetParams {
  UNetConfig config;
  LinearParams<T> time_fc1, time_fc2;
  ConvParams<T> in_proj;
  std::array<ResBlockParams<T>, 8> blocks;  // b1..b4 down path, b5..b8 up path
  std::array<ConvParams<T>, 4> down;        // stride-2 after b1..b4
  ResBlockParams<T> mid;
  std::array<ConvParams<T>, 4> up;          // conv after nearest x2, before b5..b8
  ConvParams<T> out_proj;                   // zero-initialized
};

// Block outputs b1..b8 in order; lengths L, L/2, L/4, L/8, L/8, L/4, L/2, L.
template <typename T>
using BlockActivations = std::array<Tensor<T>, 8>;

// Fan-in-scaled Gaussian weights, zero biases, unit norm scales, zeroed
// output projection so a fresh model predicts exactly 0.
template <typename T>
UNetParams<T> unet_init(const UNetConfig& config, std::uint64_t seed);

template <typename T>
UNetParams<T> zeros_like(const UNetParams<T>& params);

// Correctly shaped, all-zero parameter set for a config (checkpoint loading,
// gradient accumulators).
template <typename T>
UNetParams<T> unet_zeros(const UNetConfig& config);

template <typename T>
std::size_t parameter_count(const UNetParams<T>& params);

template <typename T>
using TensorVisitor =
    std::function<void(const std::string&, const std::vector<int>&, std::vector<T>&)>;
template <typename T>
using ConstTensorVisitor =
    std::function<void(const std::string&, const std::vector<int>&, const std::vector<T>&)>;

// Visits every tensor in a fixed order; the checkpoint format and the
// optimizer state layout both follow it. The visitor is a non-deduced
// parameter so plain lambdas bind.
template <typename T>
void for_each_tensor(UNetParams<T>& params, const std::type_identity_t<TensorVisitor<T>>& fn);
template <typename T>
void for_each_tensor(const UNetParams<T>& params,
                     const std::type_identity_t<ConstTensorVisitor<T>>& fn);

template <typename T>
Tensor<T> unet_forward(const UNetParams<T>& params, const Tensor<T>& x, int t);

template <typename T>
Tensor<T> unet_forward_capture(const UNetParams<T>& params, const Tensor<T>& x, int t,
                               BlockActivations<T>& acts);

template <typename T>
struct TrainingExample {
  Tensor<T> s_t;
  Tensor<T> eps;
  int t = 1;
};

// Draws (t, eps) per signal and forms s_t via the forward marginal.
template <typename T>
std::vector<TrainingExample<T>> make_training_examples(const std::vector<IQSignal>& batch,
                                                       const NoiseSchedule& sched, Rng& rng);

// Mean over elements and batch of (eps - model(s_t, t))^2.
template <typename T>
double unet_loss(const UNetParams<T>& params, const std::vector<TrainingExample<T>>& examples);

// Same loss; fills `grads` (zeroed first) with exact derivatives for every
// parameter.
template <typename T>
double unet_loss_and_gradients(const UNetParams<T>& params,
                               const std::vector<TrainingExample<T>>& examples,
                               UNetParams<T>& grads);

}  // namespace modfus
