#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forward.hpp"

namespace spikeyolo {

inline constexpr double kDefaultSpikeEnergy = 19e-12;  // J per spike

struct EnergyLayerRow {
  int layer_index = 0;
  std::uint64_t fired = 0;   // N_i
  std::uint64_t silent = 0;  // M_i
  double sparsity = 0.0;     // S_i = N_i / (N_i + M_i)
};

struct EnergyReport {
  std::vector<EnergyLayerRow> layers;
  std::uint64_t fired_total = 0;
  std::uint64_t silent_total = 0;
  double sparsity_total = 0.0;
  double per_spike_energy = kDefaultSpikeEnergy;
  double energy_joules = 0.0;  // fired_total * per_spike_energy
};

// Fraction of a layer's neurons that fired. Throws EmptyLayer for a layer with no neurons.
double layer_sparsity(const LayerStats& stats);

// Aggregates spiking layers only; the traditional conv head is never counted.
// Throws EmptyLayer unless at least one layer has neurons.
EnergyReport total_report(std::span<const SpikeLayerStats> stats, double per_spike_energy = kDefaultSpikeEnergy);

}  // namespace spikeyolo
