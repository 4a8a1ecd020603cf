#include "trainer.hpp"

#include <cmath>

#include "errors.hpp"
#include "random.hpp"

namespace spikeyolo {

GridSpec input_grid(const NetworkSpec& net) {
  GridSpec g = GridSpec::with_cells(net.input.len, net.input.wid, net.input.ch);
  g.roi.x = Range{0.0, net.input.len * net.voxel_size};
  g.roi.y = Range{-0.5 * net.input.wid * net.voxel_size, 0.5 * net.input.wid * net.voxel_size};
  return g;
}

Sample make_sample(const NetworkSpec& net, std::uint64_t seed, const SceneOptions& scene_options) {
  const GridSpec grid = input_grid(net);
  Scene scene = synth_scene(grid.roi, seed, scene_options);
  Sample s;
  s.input = voxelize(scene.cloud, grid, VoxelizeOptions{seed, EmptyMode::PaperLiteral, true});
  s.truth = std::move(scene.objects);
  return s;
}

LossAndGradient loss_and_gradient(const NetworkSpec& net, const WeightStore& weights, const SpikeTensor& input,
                                  std::span<const AnchorTarget> targets, const LossHyper& hyper,
                                  const ForwardOptions& options) {
  ForwardOptions opts = options;
  opts.keep_trace = true;
  ForwardResult fwd = forward(net, weights, input, opts);
  LossAndGradient out;
  Tensor grad_head;
  out.loss = loss_with_targets(fwd.head, targets, net.detect, hyper, &grad_head);
  out.grad = backward(net, weights, input, *fwd.trace, grad_head, opts.t_cap);
  out.trace = std::move(*fwd.trace);
  return out;
}

void sgd_step(WeightStore& weights, const WeightStore& grad, WeightStore& velocity, double lr, double momentum,
              double weight_decay) {
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    LayerWeights& w = weights.layers[l];
    const LayerWeights& g = grad.layers[l];
    LayerWeights& v = velocity.layers[l];
    for (std::size_t i = 0; i < w.kernel_values.size(); ++i) {
      v.kernel_values[i] = momentum * v.kernel_values[i] - lr * (g.kernel_values[i] + weight_decay * w.kernel_values[i]);
      w.kernel_values[i] += v.kernel_values[i];
    }
    for (std::size_t i = 0; i < w.bias.size(); ++i) {
      v.bias[i] = momentum * v.bias[i] - lr * g.bias[i];
      w.bias[i] += v.bias[i];
    }
  }
}

TrainResult train_toy(const NetworkSpec& net, WeightStore weights, const TrainOptions& options,
                      const std::function<void(const TrainStep&)>& on_step) {
  check_weights(net, weights);
  if (options.iterations < 0) fail(ErrorCode::InvalidArgument, "iterations must be non-negative");
  TrainResult result;
  WeightStore velocity = zero_weights(net);
  const GridGeometry geometry = GridGeometry::of(net);
  ForwardOptions fwd;
  fwd.threads = options.threads;
  fwd.t_cap = options.t_cap;
  fwd.keep_trace = true;

  for (int it = 0; it < options.iterations; ++it) {
    const Sample sample = make_sample(net, hash_combine(options.seed, static_cast<std::uint64_t>(it)), options.scene);
    const ForwardResult fr = forward(net, weights, sample.input, fwd);
    const auto targets = build_targets(fr.head, sample.truth, net.detect, geometry);
    Tensor grad_head;
    TrainStep step;
    step.iteration = it;
    step.learning_rate = it < options.warmup_iterations ? options.warmup_learning_rate : options.learning_rate;
    step.loss = loss_with_targets(fr.head, targets, net.detect, options.loss, &grad_head);
    if (!std::isfinite(step.loss.total()))
      fail(ErrorCode::TrainingDiverged, "loss became non-finite at iteration " + std::to_string(it));
    result.trace.push_back(step);
    if (on_step) on_step(step);
    const WeightStore grad = backward(net, weights, sample.input, *fr.trace, grad_head, options.t_cap);
    sgd_step(weights, grad, velocity, step.learning_rate, options.momentum, options.weight_decay);
  }
  result.weights = std::move(weights);
  return result;
}

}  // namespace spikeyolo
