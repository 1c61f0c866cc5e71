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

// Finite-difference checks of the analytic gradients.
//
// The numeric side only ever calls forward() and the loss. A probe whose
// +h or -h evaluation changes the discrete structure of the forward pass
// (silent masks, pooling winners, clipped kernel evaluations) sits on a
// kink and is skipped.

#ifndef DENN_GRADCHECK_HPP_
#define DENN_GRADCHECK_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "denn/network.hpp"
#include "denn/training.hpp"

namespace denn {

struct GradcheckOptions {
  double step = 1e-6;
  // Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  // Double-precision central differences carry an absolute noise of about
  // eps * |L| / step, which dominates the error of gradients far below it.
  double floor = 1e-2;
  std::size_t max_entries_per_tensor = 0;  // 0: every entry
  std::uint32_t seed = 1;                  // entry subsampling
};

struct GradcheckReport {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
  std::size_t rejected = 0;
  std::string worst;  // parameter name and index of the max error
  double worst_analytic = 0;
  double worst_numeric = 0;
};

// Sum of cross-entropy losses over the samples.
double total_loss(const Network& net, const std::vector<Sample>& samples);

// Hash of the discrete choices made by a forward pass over the samples.
std::uint64_t structure_signature(const Network& net,
                                  const std::vector<Sample>& samples);

GradcheckReport gradcheck(Network& net, const std::vector<Sample>& samples,
                          const GradcheckOptions& options = {});

// Randomly drawn small network plus a few samples.
struct GradcheckCase {
  std::string name;
  NetworkSpec spec;
  std::uint32_t seed = 0;
  std::vector<Sample> samples;
};

struct CaseFilter {
  std::optional<KernelKind> kernel;
  std::optional<double> q;
  std::optional<int> nu;
  std::optional<bool> conv;
};

// Case `index` of the suite; kinds cycle through dense/conv, both kernels,
// q in {1, 0.5} and nu in {0, 2} unless the filter pins them.
GradcheckCase make_gradcheck_case(std::uint32_t seed, int index,
                                  const CaseFilter& filter = {});

struct SuiteReport {
  std::vector<std::pair<std::string, GradcheckReport>> cases;
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t rejected = 0;
};

SuiteReport run_gradcheck_suite(int count, std::uint32_t seed,
                                const CaseFilter& filter = {},
                                const GradcheckOptions& options = {});

}  // namespace denn

#endif  // DENN_GRADCHECK_HPP_
