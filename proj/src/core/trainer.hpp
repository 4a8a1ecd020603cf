#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "detection.hpp"
#include "forward.hpp"
#include "scene.hpp"
#include "voxelizer.hpp"

namespace spikeyolo {

// Grid matching a network's input: default voxel footprint, x from 0, y centred.
GridSpec input_grid(const NetworkSpec& net);

// Voxelized training sample: empty cells at t = 0, normalized times.
struct Sample {
  SpikeTensor input;
  std::vector<GroundTruthBox> truth;
};

Sample make_sample(const NetworkSpec& net, std::uint64_t seed, const SceneOptions& scene = SceneOptions::toy());

struct LossAndGradient {
  LossBreakdown loss;
  WeightStore grad;
  ForwardTrace trace;
};

// Loss of `weights` on one input against fixed targets, plus its gradient.
LossAndGradient loss_and_gradient(const NetworkSpec& net, const WeightStore& weights, const SpikeTensor& input,
                                  std::span<const AnchorTarget> targets, const LossHyper& hyper,
                                  const ForwardOptions& options = {});

struct TrainOptions {
  std::uint64_t seed = 1;
  int iterations = 200;
  double learning_rate = 5e-4;
  double warmup_learning_rate = 5e-5;
  int warmup_iterations = 20;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  LossHyper loss{};
  SceneOptions scene = SceneOptions::toy();
  int threads = 1;
  TCapPolicy t_cap{};
};

struct TrainStep {
  int iteration = 0;
  double learning_rate = 0.0;
  LossBreakdown loss;
};

struct TrainResult {
  WeightStore weights;
  std::vector<TrainStep> trace;
};

// One SGD step with momentum and weight decay on kernels (biases undecayed):
//   v <- momentum v - lr (g + decay w);  w <- w + v
void sgd_step(WeightStore& weights, const WeightStore& grad, WeightStore& velocity, double lr, double momentum,
              double weight_decay);

// Trains on a fresh synthetic scene per iteration. Throws TrainingDiverged as
// soon as the loss stops being finite.
TrainResult train_toy(const NetworkSpec& net, WeightStore weights, const TrainOptions& options,
                      const std::function<void(const TrainStep&)>& on_step = {});

}  // namespace spikeyolo
