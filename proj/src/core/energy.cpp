#include "energy.hpp"

#include "errors.hpp"

namespace spikeyolo {

double layer_sparsity(const LayerStats& stats) {
  if (stats.total() == 0) fail(ErrorCode::EmptyLayer, "layer has no neurons");
  return static_cast<double>(stats.fired) / static_cast<double>(stats.total());
}

EnergyReport total_report(std::span<const SpikeLayerStats> stats, double per_spike_energy) {
  EnergyReport report;
  report.per_spike_energy = per_spike_energy;
  for (const SpikeLayerStats& s : stats) {
    EnergyLayerRow row{s.layer_index, s.stats.fired, s.stats.silent, 0.0};
    if (s.stats.total() > 0) row.sparsity = layer_sparsity(s.stats);
    report.fired_total += s.stats.fired;
    report.silent_total += s.stats.silent;
    report.layers.push_back(row);
  }
  const std::uint64_t total = report.fired_total + report.silent_total;
  if (total == 0) fail(ErrorCode::EmptyLayer, "no spiking neurons to report on");
  report.sparsity_total = static_cast<double>(report.fired_total) / static_cast<double>(total);
  report.energy_joules = static_cast<double>(report.fired_total) * per_spike_energy;
  return report;
}

}  // namespace spikeyolo
