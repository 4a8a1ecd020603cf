#include "weights.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace spikeyolo {

const LayerWeights& WeightStore::for_layer(int layer_index) const {
  for (const auto& l : layers)
    if (l.layer_index == layer_index) return l;
  fail(ErrorCode::WeightFormat, "no weights for layer " + std::to_string(layer_index));
}

LayerWeights& WeightStore::for_layer(int layer_index) {
  return const_cast<LayerWeights&>(static_cast<const WeightStore&>(*this).for_layer(layer_index));
}

WeightStore zero_weights(const NetworkSpec& net) {
  WeightStore ws;
  for (const LayerSpec& l : net.layers) {
    if (!l.parameterized()) continue;
    LayerWeights w;
    w.layer_index = l.index;
    w.kernel = l.kernel;
    w.in_channels = l.input.ch;
    w.out_channels = l.filters;
    w.kernel_values.assign(static_cast<std::size_t>(l.kernel) * l.kernel * l.input.ch * l.filters, 0.0);
    if (l.kind == LayerKind::Conv) w.bias.assign(static_cast<std::size_t>(l.filters), 0.0);
    ws.layers.push_back(std::move(w));
  }
  return ws;
}

WeightStore init_weights(const NetworkSpec& net, std::uint64_t seed) {
  WeightStore ws = zero_weights(net);
  for (LayerWeights& w : ws.layers) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(w.layer_index));
    const double fan_in = static_cast<double>(w.kernel) * w.kernel * w.in_channels;
    const bool spiking = net.layers[static_cast<std::size_t>(w.layer_index - 1)].kind == LayerKind::SpikeConv;
    const double mu = 4.0 / fan_in;
    const double half = 1.0 / std::sqrt(fan_in);
    for (double& v : w.kernel_values) {
      const double u = spiking ? uniform(rng, -mu, 3.0 * mu) : uniform(rng, -half, half);
      v = static_cast<float>(u);
    }
  }
  return ws;
}

void check_weights(const NetworkSpec& net, const WeightStore& weights) {
  std::size_t next = 0;
  for (const LayerSpec& l : net.layers) {
    if (!l.parameterized()) continue;
    const std::string label = "layer " + std::to_string(l.index);
    if (next >= weights.layers.size()) fail(ErrorCode::WeightFormat, label + ": missing weights");
    const LayerWeights& w = weights.layers[next++];
    if (w.layer_index != l.index)
      fail(ErrorCode::WeightFormat, label + ": weights belong to layer " + std::to_string(w.layer_index));
    if (w.kernel != l.kernel || w.in_channels != l.input.ch || w.out_channels != l.filters)
      fail(ErrorCode::WeightFormat, label + ": kernel " + std::to_string(w.kernel) + "x" + std::to_string(w.kernel) +
                                        "x" + std::to_string(w.in_channels) + "x" + std::to_string(w.out_channels) +
                                        " does not match the layer");
    if (w.kernel_values.size() != static_cast<std::size_t>(w.kernel) * w.kernel * w.in_channels * w.out_channels)
      fail(ErrorCode::WeightFormat, label + ": kernel value count mismatch");
    const std::size_t bias = l.kind == LayerKind::Conv ? static_cast<std::size_t>(l.filters) : 0;
    if (w.bias.size() != bias) fail(ErrorCode::WeightFormat, label + ": bias count mismatch");
  }
  if (next != weights.layers.size()) fail(ErrorCode::WeightFormat, "weights for layers the network does not have");
}

std::vector<std::uint8_t> save_weights(const WeightStore& weights, const NetworkSpec& net) {
  check_weights(net, weights);
  std::vector<std::uint8_t> out;
  for (char c : {'S', 'C', 'N', 'W'}) out.push_back(static_cast<std::uint8_t>(c));
  binio::put_u32(out, kWeightFormatVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(weights.layers.size()));
  for (const LayerWeights& w : weights.layers) {
    binio::put_u32(out, static_cast<std::uint32_t>(w.layer_index));
    binio::put_u32(out, static_cast<std::uint32_t>(w.kernel));
    binio::put_u32(out, static_cast<std::uint32_t>(w.kernel));
    binio::put_u32(out, static_cast<std::uint32_t>(w.in_channels));
    binio::put_u32(out, static_cast<std::uint32_t>(w.out_channels));
    for (double v : w.kernel_values) binio::put_f32(out, static_cast<float>(v));
    for (double v : w.bias) binio::put_f32(out, static_cast<float>(v));
  }
  return out;
}

WeightStore load_weights(std::span<const std::uint8_t> bytes, const NetworkSpec& net) {
  binio::Reader in(bytes, ErrorCode::WeightFormat);
  in.magic("SCNW");
  const std::uint32_t version = in.u32();
  if (version != kWeightFormatVersion) fail(ErrorCode::WeightFormat, "unsupported version " + std::to_string(version));
  const std::uint32_t count = in.u32();
  WeightStore expected = zero_weights(net);
  if (count != expected.layers.size())
    fail(ErrorCode::WeightFormat, "file holds " + std::to_string(count) + " layers, network has " +
                                      std::to_string(expected.layers.size()));
  for (LayerWeights& w : expected.layers) {
    const std::uint32_t index = in.u32();
    const std::uint32_t k0 = in.u32(), k1 = in.u32(), cin = in.u32(), cout = in.u32();
    if (index != static_cast<std::uint32_t>(w.layer_index) || k0 != static_cast<std::uint32_t>(w.kernel) ||
        k1 != k0 || cin != static_cast<std::uint32_t>(w.in_channels) || cout != static_cast<std::uint32_t>(w.out_channels))
      fail(ErrorCode::WeightFormat, "layer record " + std::to_string(index) + " (" + std::to_string(k0) + "x" +
                                        std::to_string(k1) + "x" + std::to_string(cin) + "x" + std::to_string(cout) +
                                        ") does not match network layer " + std::to_string(w.layer_index));
    for (double& v : w.kernel_values) v = in.f32();
    for (double& v : w.bias) v = in.f32();
  }
  if (in.remaining() != 0) fail(ErrorCode::WeightFormat, "trailing bytes after last layer");
  return expected;
}

void write_weights_file(const WeightStore& weights, const NetworkSpec& net, const std::string& path) {
  binio::write_file(path, save_weights(weights, net));
}

WeightStore read_weights_file(const std::string& path, const NetworkSpec& net) {
  return load_weights(binio::read_file(path), net);
}

}  // namespace spikeyolo
