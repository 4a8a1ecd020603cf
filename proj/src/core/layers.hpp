#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spike_neuron.hpp"
#include "tensor.hpp"
#include "weights.hpp"

namespace spikeyolo {

// Fired (finite output) and silent (NO_SPIKE) neurons of one spiking layer.
struct LayerStats {
  std::uint64_t fired = 0;
  std::uint64_t silent = 0;

  std::uint64_t total() const noexcept { return fired + silent; }
  LayerStats& operator+=(const LayerStats& o) noexcept {
    fired += o.fired;
    silent += o.silent;
    return *this;
  }
  friend bool operator==(const LayerStats&, const LayerStats&) = default;
};

inline constexpr std::uint32_t kNoArgmin = 0xffffffffu;

// Same-padded, stride-1 spiking convolution. Each output neuron solves its
// first threshold crossing over the k x k x C_in receptive field; padding
// contributes nothing. The receptive field is sorted once per position and
// shared by all filters. `causal`, when given, receives the admitted input
// count of every output neuron (0 for silent ones).
SpikeTensor spike_conv_forward(const SpikeTensor& input, const LayerWeights& weights, const NeuronConfig& cfg,
                               LayerStats& stats, int threads = 1, std::vector<std::uint32_t>* causal = nullptr);

// Earliest spike in each window; `argmin` records the winning input's flat index.
SpikeTensor min_time_pool(const SpikeTensor& input, int window = 2, int stride = 2,
                          std::vector<std::uint32_t>* argmin = nullptr);

// Space-to-depth. Output channel (bx * stride + by) * C + c holds input
// (x * stride + bx, y * stride + by, c): block position major.
SpikeTensor reorg(const SpikeTensor& input, int stride = 2);

// Channel concatenation in the listed order.
SpikeTensor route(std::span<const SpikeTensor* const> inputs);

// NO_SPIKE entering the traditional conv is replaced by T_CAP, either fixed or
// `factor` times the largest finite value in the tensor (0 if none).
struct TCapPolicy {
  double factor = 2.0;
  std::optional<double> fixed;
};

struct CapInfo {
  double t_cap = 0.0;
  std::size_t argmax = static_cast<std::size_t>(-1);  // source of a relative cap
};

CapInfo compute_cap(const Tensor& input, const TCapPolicy& policy);

// Same-padded (zero) stride-1 convolution with bias and identity activation.
Tensor linear_conv_forward(const Tensor& input, const LayerWeights& weights, const TCapPolicy& policy = {},
                           CapInfo* cap = nullptr, int threads = 1);

// ---- backward passes (accumulate into the provided gradients) ----

void spike_conv_backward(const SpikeTensor& input, const SpikeTensor& output, std::span<const std::uint32_t> causal,
                         const LayerWeights& weights, const NeuronConfig& cfg, const Tensor& grad_output,
                         Tensor& grad_input, std::vector<double>& grad_kernel);

void min_time_pool_backward(std::span<const std::uint32_t> argmin, const Tensor& grad_output, Tensor& grad_input);

void reorg_backward(const Tensor& grad_output, int stride, Tensor& grad_input);

// Adds the slices of `grad_output` back to each source, in concatenation order.
void route_backward(const Tensor& grad_output, std::span<Tensor* const> grad_inputs);

void linear_conv_backward(const Tensor& input, const LayerWeights& weights, const CapInfo& cap,
                          const TCapPolicy& policy, const Tensor& grad_output, Tensor& grad_input,
                          std::vector<double>& grad_kernel, std::vector<double>& grad_bias);

}  // namespace spikeyolo
