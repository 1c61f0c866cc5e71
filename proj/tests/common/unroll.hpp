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

#ifndef DENN_TESTS_UNROLL_HPP_
#define DENN_TESTS_UNROLL_HPP_

#include "denn/layers.hpp"

namespace denn::oracle {

// Dense layer with the same synapses as `conv`; missing ones get d^s = 0,
// which contributes exactly nothing.
inline DenseDelayLayer unroll(const ConvDelayLayer& conv, KernelSpec kernel) {
  const Shape3 out = conv.output_shape();
  const Index positions = static_cast<Index>(out.height) * out.width;
  DenseDelayLayer dense(conv.input_shape().size(), out.size(), kernel);
  dense.signed_delays.setZero();
  for (int c = 0; c < out.channels; ++c) {
    for (Index p = 0; p < positions; ++p) {
      const Index j = c * positions + p;
      dense.sigma(j) = conv.sigma(c);
      for (Index e = 0; e < conv.patch_size(); ++e) {
        const Index src = conv.source_index(p, e);
        if (src >= 0) dense.signed_delays(src, j) = conv.signed_delays(c, e);
      }
    }
  }
  dense.refresh();
  return dense;
}

}  // namespace denn::oracle

#endif  // DENN_TESTS_UNROLL_HPP_
