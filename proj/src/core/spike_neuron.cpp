#include "spike_neuron.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace spikeyolo {

double membrane_potential(std::span<const SynapticInput> inputs, double t, const NeuronConfig& cfg) {
  double v = 0.0;
  for (const SynapticInput& in : inputs) {
    if (!is_spike(in.time) || t < in.time) continue;
    v += in.weight * (1.0 - std::exp(-(t - in.time) / cfg.tau_syn));
  }
  return v;
}

namespace {

// Indices of the spiking inputs, sorted by (time, index).
std::vector<std::size_t> causal_order(std::span<const SynapticInput> inputs) {
  std::vector<std::size_t> order;
  order.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (is_spike(inputs[i].time)) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return inputs[a].time < inputs[b].time; });
  return order;
}

}  // namespace

SpikeResult solve_spike_time(std::span<const SynapticInput> inputs, const NeuronConfig& cfg) {
  const std::vector<std::size_t> order = causal_order(inputs);
  if (order.empty()) return {};
  const double t_ref = inputs[order.front()].time;
  double weight_sum = 0.0;
  double z_sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const SynapticInput& in = inputs[order[k]];
    const double z = std::exp((in.time - t_ref) / cfg.tau_syn);
    if (!std::isfinite(z)) break;
    weight_sum += in.weight;
    z_sum += in.weight * z;
    const bool last = k + 1 == order.size();
    if (!last && inputs[order[k + 1]].time == in.time) continue;  // close the tie group first
    const double z_next = last ? kNoSpike : std::exp((inputs[order[k + 1]].time - t_ref) / cfg.tau_syn);
    const double denom = weight_sum - cfg.threshold;
    if (!crossing_in_window(denom, z_sum, z, z_next)) continue;
    const double z_out = std::max(z_sum / denom, z);
    if (!std::isfinite(z_out)) return {};
    return SpikeResult{t_ref + cfg.tau_syn * std::log(z_out), k + 1};
  }
  return {};
}

SpikeResult simulate_spike_time(std::span<const SynapticInput> inputs, const NeuronConfig& cfg, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  std::vector<SynapticInput> events;
  for (const SynapticInput& in : inputs)
    if (is_spike(in.time)) events.push_back(in);
  if (events.empty()) return {};
  std::stable_sort(events.begin(), events.end(),
                   [](const SynapticInput& a, const SynapticInput& b) { return a.time < b.time; });

  const double t_end = events.back().time + 20.0 * cfg.tau_syn;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt));
  double current = 0.0;  // synaptic current, jumps by w / tau on arrival
  double potential = 0.0;
  std::size_t next = 0;
  std::size_t admitted = 0;
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    while (next < events.size() && events[next].time <= t) {
      current += events[next].weight / cfg.tau_syn;
      ++next;
      admitted = next;
    }
    const double updated = potential + dt * current;
    if (updated >= cfg.threshold) {
      const double frac = (cfg.threshold - potential) / (updated - potential);
      return SpikeResult{t + frac * dt, admitted};
    }
    potential = updated;
    current -= dt * current / cfg.tau_syn;
  }
  return {};
}

SpikeGradients spike_gradients(std::span<const SynapticInput> inputs, const SpikeResult& result,
                               const NeuronConfig& cfg) {
  if (!result.fired()) fail(ErrorCode::NonDifferentiable, "neuron did not fire");
  const std::vector<std::size_t> order = causal_order(inputs);
  const std::size_t k = result.causal_count;
  if (k == 0 || k > order.size()) fail(ErrorCode::NonDifferentiable, "causal count inconsistent with inputs");
  const double t_last = inputs[order[k - 1]].time;
  if (!(result.t_out > t_last)) fail(ErrorCode::NonDifferentiable, "output coincides with its last causal input");
  if (k < order.size() && !(result.t_out < inputs[order[k]].time))
    fail(ErrorCode::NonDifferentiable, "output coincides with the next input");

  SpikeGradients g;
  g.reference_time = inputs[order.front()].time;
  g.dz_dweight.assign(inputs.size(), 0.0);
  g.dz_dz.assign(inputs.size(), 0.0);
  g.dt_dweight.assign(inputs.size(), 0.0);
  g.dt_dtime.assign(inputs.size(), 0.0);

  double weight_sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) weight_sum += inputs[order[j]].weight;
  const double denom = weight_sum - cfg.threshold;
  if (!(denom > kDenominatorGuard)) fail(ErrorCode::NonDifferentiable, "weight sum at the firing threshold");

  const double tau = cfg.tau_syn;
  const double z_out = std::exp((result.t_out - g.reference_time) / tau);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = order[j];
    const double z = std::exp((inputs[i].time - g.reference_time) / tau);
    g.dz_dweight[i] = (z - z_out) / denom;
    g.dz_dz[i] = inputs[i].weight / denom;
    // t = tau ln z, dz_i/dt_i = z_i / tau
    g.dt_dweight[i] = tau * g.dz_dweight[i] / z_out;
    g.dt_dtime[i] = g.dz_dz[i] * z / z_out;
  }
  return g;
}

}  // namespace spikeyolo
