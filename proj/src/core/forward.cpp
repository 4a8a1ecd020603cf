#include "forward.hpp"

#include "errors.hpp"

namespace spikeyolo {

bool ForwardTrace::same_discrete_path(const ForwardTrace& other) const {
  if (causal != other.causal || argmin != other.argmin || caps.size() != other.caps.size()) return false;
  for (std::size_t i = 0; i < caps.size(); ++i)
    if (caps[i].argmax != other.caps[i].argmax) return false;
  return true;
}

namespace {

std::vector<std::size_t> last_uses(const NetworkSpec& net) {
  const std::size_t n = net.layers.size();
  std::vector<std::size_t> last(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = net.layers[i];
    if (l.kind == LayerKind::Route) {
      for (int src : l.route_sources) last[static_cast<std::size_t>(src - 1)] = i;
    } else if (i > 0) {
      last[i - 1] = i;
    }
  }
  last[n - 1] = n;
  return last;
}

}  // namespace

ForwardResult forward(const NetworkSpec& net, const WeightStore& weights, const SpikeTensor& input,
                      const ForwardOptions& options) {
  if (input.shape() != net.input)
    fail(ErrorCode::LayerShape, "input tensor " + to_string(input.shape()) + " does not match network input " +
                                    to_string(net.input));
  check_weights(net, weights);
  const std::size_t n = net.layers.size();
  const std::vector<std::size_t> last = last_uses(net);

  ForwardResult result;
  ForwardTrace trace;
  trace.causal.resize(n);
  trace.argmin.resize(n);
  trace.caps.resize(n);
  std::vector<std::optional<Tensor>> outputs(n);

  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = net.layers[i];
    const Tensor& prev = i == 0 ? input : *outputs[i - 1];
    Tensor out;
    switch (l.kind) {
      case LayerKind::SpikeConv: {
        LayerStats stats;
        out = spike_conv_forward(prev, weights.for_layer(l.index), net.neuron, stats, options.threads,
                                 options.keep_trace ? &trace.causal[i] : nullptr);
        result.stats.push_back({l.index, stats});
        break;
      }
      case LayerKind::MaxPool:
        out = min_time_pool(prev, l.kernel, l.stride, options.keep_trace ? &trace.argmin[i] : nullptr);
        break;
      case LayerKind::Reorg:
        out = reorg(prev, l.stride);
        break;
      case LayerKind::Route: {
        std::vector<const Tensor*> sources;
        for (int src : l.route_sources) sources.push_back(&*outputs[static_cast<std::size_t>(src - 1)]);
        out = route(sources);
        break;
      }
      case LayerKind::Conv:
        out = linear_conv_forward(prev, weights.for_layer(l.index), options.t_cap, &trace.caps[i], options.threads);
        break;
    }
    if (out.shape() != l.output)
      fail(ErrorCode::LayerShape, "layer " + std::to_string(l.index) + " produced " + to_string(out.shape()) +
                                      ", expected " + to_string(l.output));
    outputs[i] = std::move(out);
    if (!options.keep_trace) {
      for (std::size_t j = 0; j < i; ++j)
        if (outputs[j] && last[j] <= i) outputs[j].reset();
    }
  }

  result.head = std::move(*outputs[n - 1]);
  if (options.keep_trace) {
    for (std::size_t i = 0; i + 1 < n; ++i) trace.outputs.push_back(std::move(*outputs[i]));
    trace.outputs.push_back(result.head);
    result.trace = std::move(trace);
  }
  return result;
}

WeightStore backward(const NetworkSpec& net, const WeightStore& weights, const SpikeTensor& input,
                     const ForwardTrace& trace, const Tensor& grad_head, const TCapPolicy& t_cap) {
  const std::size_t n = net.layers.size();
  if (trace.outputs.size() != n) fail(ErrorCode::InvalidArgument, "forward trace does not cover the network");
  if (grad_head.shape() != net.head_shape()) fail(ErrorCode::InvalidArgument, "head gradient has the wrong shape");

  WeightStore grads = zero_weights(net);
  std::vector<Tensor> grad(n);
  for (std::size_t i = 0; i < n; ++i) grad[i] = Tensor(net.layers[i].output);
  grad[n - 1] = grad_head;
  Tensor grad_input(net.input);

  for (std::size_t i = n; i-- > 0;) {
    const LayerSpec& l = net.layers[i];
    const Tensor& in = i == 0 ? input : trace.outputs[i - 1];
    Tensor& gin = i == 0 ? grad_input : grad[i - 1];
    switch (l.kind) {
      case LayerKind::SpikeConv: {
        LayerWeights& gw = grads.for_layer(l.index);
        spike_conv_backward(in, trace.outputs[i], trace.causal[i], weights.for_layer(l.index), net.neuron, grad[i],
                            gin, gw.kernel_values);
        break;
      }
      case LayerKind::MaxPool:
        min_time_pool_backward(trace.argmin[i], grad[i], gin);
        break;
      case LayerKind::Reorg:
        reorg_backward(grad[i], l.stride, gin);
        break;
      case LayerKind::Route: {
        std::vector<Tensor*> targets;
        for (int src : l.route_sources) targets.push_back(&grad[static_cast<std::size_t>(src - 1)]);
        route_backward(grad[i], targets);
        break;
      }
      case LayerKind::Conv: {
        LayerWeights& gw = grads.for_layer(l.index);
        linear_conv_backward(in, weights.for_layer(l.index), trace.caps[i], t_cap, grad[i], gin, gw.kernel_values,
                             gw.bias);
        break;
      }
    }
  }
  return grads;
}

}  // namespace spikeyolo
