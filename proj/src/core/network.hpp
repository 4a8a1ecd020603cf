#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "spike_neuron.hpp"
#include "tensor.hpp"

namespace spikeyolo {

enum class LayerKind { SpikeConv, MaxPool, Reorg, Route, Conv };

const char* layer_kind_name(LayerKind kind) noexcept;

struct LayerSpec {
  int index = 0;  // 1-based position in the config; route sources refer to it
  LayerKind kind = LayerKind::SpikeConv;
  int filters = 0;
  int kernel = 0;
  int stride = 1;
  std::vector<int> route_sources;
  Shape input;
  Shape output;

  bool parameterized() const noexcept { return kind == LayerKind::SpikeConv || kind == LayerKind::Conv; }
};

// Box prior in output-grid cell units.
struct AnchorPrior {
  double w = 1.0;
  double l = 1.0;
};

// Channel layout per anchor in the head: t_x, t_y, t_w, t_l, t_im, t_re,
// objectness logit, then one score per class.
struct DetectSpec {
  std::vector<AnchorPrior> anchors{{0.6, 1.3}, {0.8, 2.0}, {1.0, 3.0}, {0.5, 0.5}, {1.5, 4.5}};
  int classes = 8;

  int values_per_anchor() const noexcept { return 7 + classes; }
  int channels() const noexcept { return static_cast<int>(anchors.size()) * values_per_anchor(); }
};

struct NetworkSpec {
  Shape input;
  std::vector<LayerSpec> layers;
  DetectSpec detect;
  NeuronConfig neuron;
  double voxel_size = 60.0 / 768.0;  // metres per input cell in x and y

  bool skip_connections() const noexcept;
  const Shape& head_shape() const { return layers.back().output; }
  int spike_layer_count() const noexcept;
  // Output cell size in metres and the y offset of the grid origin.
  double head_cell_size() const noexcept { return voxel_size * input.len / head_shape().len; }
  double head_origin_y() const noexcept { return -0.5 * voxel_size * input.wid; }
};

// Parses the line-oriented config format: `[net]`, one `[layer]` block per
// layer, and an optional `[detect]` block; `key = value` lines; `#` comments.
// Throws ConfigError on syntax/unknown keys and ConfigShapeError when a
// declared shape disagrees with the inferred one.
NetworkSpec parse_config(std::string_view text);
NetworkSpec read_config_file(const std::string& path);

Shape parse_shape(std::string_view text);

}  // namespace spikeyolo
