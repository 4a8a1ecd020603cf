#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "network.hpp"

namespace spikeyolo {

// Kernel of one parameterized layer, laid out [dx][dy][c_in][c_out] so that
// the weights of every filter for one input are contiguous.
struct LayerWeights {
  int layer_index = 0;
  int kernel = 0;
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> kernel_values;
  std::vector<double> bias;  // traditional conv only

  std::size_t row(int dx, int dy, int c) const noexcept {
    return (static_cast<std::size_t>(dx) * kernel + dy) * in_channels + c;
  }
  double& at(int dx, int dy, int c, int f) noexcept {
    return kernel_values[row(dx, dy, c) * out_channels + f];
  }
  double at(int dx, int dy, int c, int f) const noexcept {
    return kernel_values[row(dx, dy, c) * out_channels + f];
  }
  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

// One entry per parameterized layer, in layer order.
struct WeightStore {
  std::vector<LayerWeights> layers;

  const LayerWeights& for_layer(int layer_index) const;
  LayerWeights& for_layer(int layer_index);
  friend bool operator==(const WeightStore&, const WeightStore&) = default;
};

// Zero-filled store with shapes matching `net`.
WeightStore zero_weights(const NetworkSpec& net);

// Spiking kernels: uniform on [-mu, 3 mu] with mu = 4 / (k k C_in), so a fully
// admitted receptive field sums to about 4 (well above threshold 1).
// Traditional conv: uniform on +-1/sqrt(k k C_in), zero bias.
// Every value is float-representable so save/load round-trips exactly.
WeightStore init_weights(const NetworkSpec& net, std::uint64_t seed);

// Throws WeightFormat if any layer disagrees with `net`.
void check_weights(const NetworkSpec& net, const WeightStore& weights);

// "SCNW", u32 version, u32 layer count, then per layer: u32 layer index,
// u32 dims (k, k, C_in, C_out), float32 kernel values, float32 biases (conv only).
inline constexpr std::uint32_t kWeightFormatVersion = 1;
std::vector<std::uint8_t> save_weights(const WeightStore& weights, const NetworkSpec& net);
WeightStore load_weights(std::span<const std::uint8_t> bytes, const NetworkSpec& net);
void write_weights_file(const WeightStore& weights, const NetworkSpec& net, const std::string& path);
WeightStore read_weights_file(const std::string& path, const NetworkSpec& net);

}  // namespace spikeyolo
