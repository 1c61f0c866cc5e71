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

// Inspection of a trained network. Everything here returns plain tables;
// the matching writers emit CSV for external plotting.

#ifndef DENN_DIAGNOSTICS_HPP_
#define DENN_DIAGNOSTICS_HPP_

#include <iosfwd>
#include <vector>

#include "denn/network.hpp"
#include "denn/training.hpp"

namespace denn {

// Row s holds the posterior computed from frames 0..s only.
Matrix posterior_trace(const Network& net, const Matrix& frames);
void write_posterior_csv(std::ostream& os, const Matrix& trace);

// Per hidden stage, z[s] - z[s-1] of the stage output for s = 1..M-1;
// NaN where either frame left the neuron silent.
std::vector<Matrix> delta_maps(const Network& net, const Matrix& frames);
void write_delta_csv(std::ostream& os, const std::vector<Matrix>& maps);

struct Histogram {
  std::size_t stage = 0;
  double lo = 0;
  double hi = 0;
  std::vector<std::uint64_t> counts;
};

// Pre-standardization spike times of every delay stage, live entries only,
// pooled over the samples. Each sample's times are centred and scaled by
// their own spread first so samples of different magnitude line up.
std::vector<Histogram> spike_time_histograms(const Network& net,
                                             const Dataset& data, int bins);
void write_histogram_csv(std::ostream& os, const std::vector<Histogram>& hists);

// Skewness of the raw spike times of `stage`, averaged over the samples of
// each class (rows: class, columns: mean skewness, samples).
Matrix class_skewness(const Network& net, const Dataset& data,
                      std::size_t stage);
void write_skewness_csv(std::ostream& os, const Matrix& skew);

double skewness(const Eigen::Ref<const VectorXd>& values);

// Mean synaptic activity sign(d^s)[k(z_i + d) - k(z_i + 1)] of each input
// of the dense output stage onto each output neuron, per class of image.
// Entry [c](j, i): class c, output neuron j, presynaptic neuron i.
std::vector<Matrix> synaptic_impact(const Network& net, const Dataset& data);
void write_impact_csv(std::ostream& os, const std::vector<Matrix>& impact);

struct ActivityCurve {
  VectorXd signed_delay;
  VectorXd delay;
  VectorXd corrected;    // sign(d^s)[k(z + d) - k(z + 1)]
  VectorXd uncorrected;  // sign(d^s) k(z + d)
};
ActivityCurve activity_curve(const KernelSpec& kernel, double z, double sigma,
                             double range, int points);
void write_activity_csv(std::ostream& os, const ActivityCurve& curve);

}  // namespace denn

#endif  // DENN_DIAGNOSTICS_HPP_
