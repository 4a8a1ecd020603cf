#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "layers.hpp"
#include "network.hpp"
#include "weights.hpp"

namespace spikeyolo {

struct ForwardOptions {
  int threads = 1;
  TCapPolicy t_cap{};
  bool keep_trace = false;  // retain every activation for backward()
};

struct SpikeLayerStats {
  int layer_index = 0;
  LayerStats stats;
};

// Activations and discrete routing decisions of one forward pass.
struct ForwardTrace {
  std::vector<Tensor> outputs;                      // per layer
  std::vector<std::vector<std::uint32_t>> causal;   // spike_conv layers
  std::vector<std::vector<std::uint32_t>> argmin;   // maxpool layers
  std::vector<CapInfo> caps;                        // conv layers

  // True when both passes admitted the same causal sets, picked the same pool
  // winners and the same T_CAP source, i.e. they lie on one smooth piece.
  bool same_discrete_path(const ForwardTrace& other) const;
};

struct ForwardResult {
  Tensor head;
  std::vector<SpikeLayerStats> stats;  // one per spike_conv layer, in order
  std::optional<ForwardTrace> trace;
};

ForwardResult forward(const NetworkSpec& net, const WeightStore& weights, const SpikeTensor& input,
                      const ForwardOptions& options = {});

// Gradient of a scalar loss with respect to every weight, given dLoss/dHead
// and the trace of the forward pass. Silent neurons pass no gradient, pools
// route to their winner, reorg/route permute.
WeightStore backward(const NetworkSpec& net, const WeightStore& weights, const SpikeTensor& input,
                     const ForwardTrace& trace, const Tensor& grad_head, const TCapPolicy& t_cap = {});

}  // namespace spikeyolo
