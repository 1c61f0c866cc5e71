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

#include "denn/energy.hpp"

#include <cmath>
#include <ostream>

namespace denn {

LayerOps& LayerOps::operator+=(const LayerOps& other) {
  active += other.active;
  synapses += other.synapses;
  neurons += other.neurons;
  frames += other.frames;
  return *this;
}

std::uint64_t OpCounts::active() const {
  std::uint64_t total = 0;
  for (const auto& l : layers) total += l.active;
  return total;
}

OpCounts& OpCounts::operator+=(const OpCounts& other) {
  if (layers.empty()) {
    layers = other.layers;
  } else {
    if (layers.size() != other.layers.size()) {
      throw ShapeError("cannot merge counts of different networks");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i] += other.layers[i];
  }
  samples += other.samples;
  return *this;
}

double EnergyModel::cycles(const PrimitiveOps& ops) const {
  return cycles_per_add * static_cast<double>(ops.add) +
         cycles_per_mul * static_cast<double>(ops.mul) +
         cycles_per_exp * static_cast<double>(ops.exp);
}

namespace {

std::uint64_t live_count(const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  std::uint64_t n = 0;
  for (Index i = 0; i < z.size(); ++i) n += !is_silent(z(i));
  return n;
}

}  // namespace

OpCounts count_active(const Network& net, const ForwardTape& tape) {
  OpCounts counts;
  counts.samples = 1;
  const auto& stages = net.stages();
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const Stage& stage = stages[k];
    const Matrix& z = tape.stages[k].input;
    LayerOps ops;
    ops.name = "stage" + std::to_string(k);
    ops.nu = stage.memory.nu();
    ops.frames = static_cast<std::uint64_t>(z.rows());
    if (const auto* dense = std::get_if<DenseDelayLayer>(&stage.layer)) {
      const auto n_out = static_cast<std::uint64_t>(dense->outputs());
      ops.name += ".dense";
      for (Index f = 0; f < z.rows(); ++f) {
        ops.active += live_count(z.row(f)) * n_out;
        ops.synapses += static_cast<std::uint64_t>(dense->inputs()) * n_out;
        ops.neurons += n_out;
      }
    } else if (const auto* conv = std::get_if<ConvDelayLayer>(&stage.layer)) {
      const Shape3 out = conv->output_shape();
      const Index positions = static_cast<Index>(out.height) * out.width;
      const auto c_out = static_cast<std::uint64_t>(out.channels);
      ops.name += ".conv";
      for (Index f = 0; f < z.rows(); ++f) {
        for (Index p = 0; p < positions; ++p) {
          for (Index e = 0; e < conv->patch_size(); ++e) {
            const Index src = conv->source_index(p, e);
            if (src < 0) continue;
            ops.synapses += c_out;
            if (!is_silent(z(f, src))) ops.active += c_out;
          }
        }
        ops.neurons += static_cast<std::uint64_t>(out.size());
      }
    } else {
      continue;
    }
    counts.layers.push_back(ops);
  }
  return counts;
}

PrimitiveOps layer_ops(const LayerOps& layer) {
  PrimitiveOps ops;
  // Event-driven hardware does no work for a layer that receives nothing.
  if (layer.active == 0) return ops;
  const auto nu = static_cast<std::uint64_t>(layer.nu);
  ops.exp = 2 * layer.active + nu * layer.neurons;
  ops.add = 3 * layer.active + 5 * layer.neurons;
  ops.mul = (nu + 2) * layer.neurons + 2 * layer.frames;
  return ops;
}

OpCounts counts_from_total(const NetworkSpec& spec, std::uint64_t active) {
  const Network net(spec, 0);
  OpCounts counts;
  counts.samples = 1;
  std::uint64_t total = 0;
  const auto& stages = net.stages();
  for (std::size_t k = 0; k < stages.size(); ++k) {
    LayerOps ops;
    ops.name = "stage" + std::to_string(k);
    ops.nu = stages[k].memory.nu();
    ops.frames = 1;
    if (const auto* dense = std::get_if<DenseDelayLayer>(&stages[k].layer)) {
      ops.name += ".dense";
      ops.neurons = static_cast<std::uint64_t>(dense->outputs());
      ops.synapses = ops.neurons * static_cast<std::uint64_t>(dense->inputs());
    } else if (const auto* conv = std::get_if<ConvDelayLayer>(&stages[k].layer)) {
      ops.name += ".conv";
      ops.neurons = static_cast<std::uint64_t>(conv->output_shape().size());
      ops.synapses = ops.neurons * static_cast<std::uint64_t>(conv->patch_size());
    } else {
      continue;
    }
    total += ops.synapses;
    counts.layers.push_back(ops);
  }
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < counts.layers.size(); ++i) {
    auto& l = counts.layers[i];
    if (i + 1 == counts.layers.size()) {
      l.active = active - assigned;
    } else {
      l.active = static_cast<std::uint64_t>(std::llround(
          static_cast<double>(active) * static_cast<double>(l.synapses) /
          static_cast<double>(total)));
      assigned += l.active;
    }
  }
  return counts;
}

std::vector<EnergyRow> energy_report(const OpCounts& counts,
                                     const EnergyModel& model) {
  std::vector<EnergyRow> rows;
  const double per = counts.samples ? 1.0 / static_cast<double>(counts.samples)
                                    : 0.0;
  EnergyRow total;
  total.layer = "total";
  for (const auto& l : counts.layers) {
    EnergyRow row;
    row.layer = l.name;
    row.ops = layer_ops(l);
    row.active = l.active;
    row.cycles = model.cycles(row.ops) * per;
    row.joules = row.cycles * model.joules_per_cycle;
    total.active += row.active;
    total.ops.add += row.ops.add;
    total.ops.mul += row.ops.mul;
    total.ops.exp += row.ops.exp;
    total.cycles += row.cycles;
    total.joules += row.joules;
    rows.push_back(row);
  }
  rows.push_back(total);
  return rows;
}

double denn_energy(const OpCounts& counts, const EnergyModel& model) {
  return energy_report(counts, model).back().joules;
}

void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows) {
  os << "layer,active_synapses,ADD,MUL,EXP,cycles,joules\n";
  for (const auto& r : rows) {
    os << r.layer << ',' << r.active << ',' << r.ops.add << ',' << r.ops.mul
       << ',' << r.ops.exp << ',' << r.cycles << ',' << r.joules << '\n';
  }
}

std::vector<ComplexityRow> complexity_report(const OpCounts& counts) {
  std::vector<ComplexityRow> rows;
  double total = 0;
  for (const auto& l : counts.layers) {
    ComplexityRow row;
    row.layer = l.name;
    row.tau = l.tau();
    if (l.frames > 0) {
      row.value = (static_cast<double>(l.active) +
                   2.0 * static_cast<double>(l.neurons)) /
                  static_cast<double>(l.frames);
    }
    total += row.value;
    rows.push_back(row);
  }
  rows.push_back({"total", total, 0.0});
  return rows;
}

void write_complexity_csv(std::ostream& os,
                          const std::vector<ComplexityRow>& rows) {
  os << "layer,operations_per_frame,tau\n";
  for (const auto& r : rows) {
    os << r.layer << ',' << r.value << ',' << r.tau << '\n';
  }
}

double spinnaker_joules_per_cycle(const ChipBudget& b) {
  const double active = b.peak_watts - b.idle_watts;
  const double cores = active - b.links * b.watts_per_link;
  return cores / b.cores * b.seconds_per_cycle;
}

}  // namespace denn
