// Copyright 2026 The denn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Operation counting and the SpiNNaker energy model.
//
// Per frame and delay layer with n neurons fed through A active synapses:
//   EXP = 2A, ADD = 3A + 5n, MUL = 2n + 2
// and with long-term memory of length nu: MUL = (nu + 2) n + 2, EXP += nu n.
// A synapse is active when its presynaptic neuron fired in that frame.

#ifndef DENN_ENERGY_HPP_
#define DENN_ENERGY_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "denn/network.hpp"

namespace denn {

struct LayerOps {
  std::string name;
  std::uint64_t active = 0;    // active synapses, summed over frames
  std::uint64_t synapses = 0;  // all synapses, summed over frames
  std::uint64_t neurons = 0;   // postsynaptic neurons, summed over frames
  std::uint64_t frames = 0;
  int nu = 0;

  LayerOps& operator+=(const LayerOps& other);
  // Ratio of active to total synapses.
  double tau() const {
    return synapses ? static_cast<double>(active) / static_cast<double>(synapses)
                    : 0.0;
  }
};

struct OpCounts {
  std::vector<LayerOps> layers;  // delay layers only
  std::uint64_t samples = 0;

  std::uint64_t active() const;
  OpCounts& operator+=(const OpCounts& other);
};

struct PrimitiveOps {
  std::uint64_t add = 0;
  std::uint64_t mul = 0;
  std::uint64_t exp = 0;
};

struct EnergyModel {
  double cycles_per_add = 1;
  double cycles_per_mul = 2;
  double cycles_per_exp = 95;
  double joules_per_cycle = 2.56e-11;

  double cycles(const PrimitiveOps& ops) const;
};

// Counts for one sample from its forward tape.
OpCounts count_active(const Network& net, const ForwardTape& tape);

PrimitiveOps layer_ops(const LayerOps& layer);

// Counts for a user-supplied total of active synapses per sample on one
// frame, spread over the delay layers in proportion to their synapse counts.
OpCounts counts_from_total(const NetworkSpec& spec, std::uint64_t active);

struct EnergyRow {
  std::string layer;
  std::uint64_t active = 0;
  PrimitiveOps ops;
  double cycles = 0;
  double joules = 0;
};

// One row per layer plus a "total" row; counts are averaged per sample.
std::vector<EnergyRow> energy_report(const OpCounts& counts,
                                     const EnergyModel& model = {});
double denn_energy(const OpCounts& counts, const EnergyModel& model = {});
void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows);

// Complexity per frame: dense n_out (n_in' + 2) with n_in' the firing inputs
// (all of them at q = 1); conv C_o H_o W_o (tau C_in k^2 + 2).
struct ComplexityRow {
  std::string layer;
  double value = 0;
  double tau = 0;
};
std::vector<ComplexityRow> complexity_report(const OpCounts& counts);
void write_complexity_csv(std::ostream& os,
                          const std::vector<ComplexityRow>& rows);

// Energy per clock cycle from a chip power budget.
struct ChipBudget {
  double peak_watts = 1.0;
  double idle_watts = 0.36 + 0.17;  // idle chip plus SDRAM
  int links = 6;
  double watts_per_link = 0.063;
  int cores = 18;
  double seconds_per_cycle = 5e-9;
};
double spinnaker_joules_per_cycle(const ChipBudget& budget = {});

}  // namespace denn

#endif  // DENN_ENERGY_HPP_
