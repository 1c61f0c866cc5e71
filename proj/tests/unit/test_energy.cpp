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

#include <random>
#include <sstream>

#include "doctest.h"
#include "denn/energy.hpp"
#include "denn/events.hpp"

using namespace denn;

namespace {

Matrix gaussian_frames(Index frames, Index cols, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  Matrix z(frames, cols);
  for (Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  return standardize_frames(z);
}

}  // namespace

TEST_CASE("mnist energy from the published counts") {
  const NetworkSpec mnist = architecture_preset("mnist");
  // mpmath oracle (tools/oracles.py).
  CHECK(denn_energy(counts_from_total(mnist, 14804)) * 1e6 ==
        doctest::Approx(73.169152).epsilon(1e-12));
  CHECK(denn_energy(counts_from_total(mnist, 8135)) * 1e6 ==
        doctest::Approx(40.2189568).epsilon(1e-12));
  // Published figures, 73 and 40 uJ.
  CHECK(denn_energy(counts_from_total(mnist, 14804)) * 1e6 ==
        doctest::Approx(73.0).epsilon(0.02));
  CHECK(denn_energy(counts_from_total(mnist, 8135)) * 1e6 ==
        doctest::Approx(40.0).epsilon(0.02));
  CHECK(denn_energy(counts_from_total(mnist, 0)) == 0.0);
  CHECK(counts_from_total(mnist, 14804).active() == 14804);
}

TEST_CASE("spinnaker joules per cycle") {
  CHECK(spinnaker_joules_per_cycle() ==
        doctest::Approx(2.5555555555555556e-11).epsilon(1e-14));
  CHECK(spinnaker_joules_per_cycle() == doctest::Approx(2.56e-11).epsilon(0.005));
  CHECK(EnergyModel{}.joules_per_cycle == 2.56e-11);
}

TEST_CASE("per-layer operation counts") {
  LayerOps l;
  l.active = 100;
  l.neurons = 10;
  l.frames = 1;
  PrimitiveOps ops = layer_ops(l);
  CHECK(ops.exp == 200);
  CHECK(ops.add == 350);
  CHECK(ops.mul == 22);
  l.nu = 25;
  ops = layer_ops(l);
  CHECK(ops.exp == 200 + 250);
  CHECK(ops.mul == 27 * 10 + 2);
  CHECK(EnergyModel{}.cycles(ops) == doctest::Approx(450 * 95 + 350 + 2 * 272));
  l.active = 0;
  ops = layer_ops(l);
  CHECK(ops.exp + ops.add + ops.mul == 0);
}

TEST_CASE("energy is monotone in every count") {
  std::mt19937 rng(1);
  std::uniform_int_distribution<std::uint64_t> u(1, 5000);
  for (int n = 0; n < 200; ++n) {
    OpCounts c;
    c.samples = 1;
    LayerOps l;
    l.active = u(rng);
    l.neurons = u(rng);
    l.frames = 1 + u(rng) % 5;
    l.nu = static_cast<int>(u(rng) % 4);
    c.layers.push_back(l);
    const double base = denn_energy(c);
    for (int field = 0; field < 4; ++field) {
      OpCounts d = c;
      auto& m = d.layers[0];
      if (field == 0) ++m.active;
      if (field == 1) ++m.neurons;
      if (field == 2) ++m.frames;
      if (field == 3) ++m.nu;
      CHECK(denn_energy(d) >= base);
    }
  }
}

TEST_CASE("active synapses from a forward pass") {
  NetworkSpec spec = architecture_preset("mnist");
  Network slow(spec, 7);
  spec.q = 0.5;
  Network fast(spec, 7);
  const Matrix x = gaussian_frames(2, 784, 3);
  ForwardTape a, b;
  slow.forward(x, &a);
  fast.forward(x, &b);
  const OpCounts ca = count_active(slow, a), cb = count_active(fast, b);
  REQUIRE(ca.layers.size() == 2);
  CHECK(ca.layers[0].active == 2 * 784 * 100);
  CHECK(ca.layers[1].active == 2 * 100 * 10);
  CHECK(ca.layers[0].tau() == 1.0);
  // Half of each Gaussian layer survives the median.
  CHECK(cb.layers[0].active == 2 * 392 * 100);
  CHECK(cb.layers[1].active == 2 * 50 * 10);
  CHECK(cb.active() <= ca.active());

  const auto rows = complexity_report(ca);
  CHECK(rows[0].value == doctest::Approx(100.0 * (784 + 2)));
  CHECK(rows[1].value == doctest::Approx(10.0 * (100 + 2)));
  CHECK(rows.back().layer == "total");

  // All-silent input reaching a layer.
  ForwardTape silent = a;
  silent.stages[0].input.setConstant(kSilent<double>);
  const OpCounts cs = count_active(slow, silent);
  CHECK(cs.layers[0].active == 0);
  CHECK(cs.layers[0].synapses == 2 * 784 * 100);

  OpCounts sum_ab = ca, sum_ba = cb;
  sum_ab += cb;
  sum_ba += ca;
  CHECK(sum_ab.active() == sum_ba.active());
  CHECK(sum_ab.samples == 2);
  CHECK(denn_energy(sum_ab) == doctest::Approx(denn_energy(sum_ba)));
}

TEST_CASE("conv complexity") {
  const NetworkSpec spec = NetworkSpec::parse({2, 34, 34}, "8c5s2-10");
  Network net(spec, 2);
  ForwardTape tape;
  net.forward(gaussian_frames(1, 2 * 34 * 34, 9), &tape);
  const OpCounts c = count_active(net, tape);
  CHECK(c.layers[0].neurons == 8 * 15 * 15);
  CHECK(c.layers[0].tau() == 1.0);
  const auto rows = complexity_report(c);
  CHECK(rows[0].value == doctest::Approx(8.0 * 15 * 15 * (1.0 * 2 * 25 + 2)));
}

TEST_CASE("energy csv") {
  std::ostringstream os;
  write_energy_csv(os, energy_report(counts_from_total(architecture_preset("mnist"), 14804)));
  const std::string text = os.str();
  CHECK(text.rfind("layer,active_synapses,ADD,MUL,EXP,cycles,joules\n", 0) == 0);
  CHECK(text.find("total,14804,") != std::string::npos);
}
