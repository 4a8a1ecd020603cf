#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace spikeyolo {

struct SynapticInput {
  double time = kNoSpike;  // network time units, >= 0 or NO_SPIKE
  double weight = 0.0;
};

struct NeuronConfig {
  double threshold = 1.0;
  double tau_syn = 1.0;
};

// Prefixes whose weight sum exceeds the threshold by no more than this never fire.
inline constexpr double kDenominatorGuard = 1e-12;

// With W the admitted weight sum and Z = sum w_i z_i, the crossing
// z_out = Z / (W - threshold) lies in [z, z_next). Written without the division
// so a whole filter bank can be screened branch-free.
inline bool crossing_in_window(double denom, double z_sum, double z, double z_next) noexcept {
  return (denom > kDenominatorGuard) & (z_sum >= z * denom) & (z_sum < z_next * denom);
}

struct SpikeResult {
  double t_out = kNoSpike;
  std::size_t causal_count = 0;  // inputs admitted before the crossing
  bool fired() const noexcept { return is_spike(t_out); }
};

// V(t) = sum_i [t >= t_i] w_i (1 - exp(-(t - t_i) / tau)).
double membrane_potential(std::span<const SynapticInput> inputs, double t, const NeuronConfig& cfg = {});

// Closed-form first threshold crossing of the non-leaky integrate-and-fire
// neuron. Inputs are admitted in time order, equal times together; for each
// admitted prefix with weight sum W > threshold the crossing is
//   exp(t_out / tau) = sum w_i exp(t_i / tau) / (W - threshold)
// and it is accepted when it falls inside [t_k, t_{k+1}).
// Arithmetic runs in z = exp((t - t_ref) / tau) with t_ref the earliest input.
SpikeResult solve_spike_time(std::span<const SynapticInput> inputs, const NeuronConfig& cfg = {});

// Forward-Euler integration of the synaptic current and membrane from t = 0 to
// max input time + 20 tau; crossing time is linearly interpolated in the step.
SpikeResult simulate_spike_time(std::span<const SynapticInput> inputs, const NeuronConfig& cfg, double dt);

// Derivatives of a firing neuron's output with respect to each input,
// indexed like `inputs`; non-causal entries are zero. z-domain values are
// expressed relative to z_ref = exp(reference_time / tau).
struct SpikeGradients {
  double reference_time = 0.0;
  std::vector<double> dz_dweight;
  std::vector<double> dz_dz;
  std::vector<double> dt_dweight;
  std::vector<double> dt_dtime;
};

// Throws NonDifferentiable unless `result` fired strictly between two
// distinct input times with W - threshold above the guard.
SpikeGradients spike_gradients(std::span<const SynapticInput> inputs, const SpikeResult& result,
                               const NeuronConfig& cfg = {});

}  // namespace spikeyolo
