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

#ifndef DENN_NETWORK_HPP_
#define DENN_NETWORK_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "denn/layers.hpp"

namespace denn {

enum class LayerKind { kDense, kConv, kMinPool };

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int units = 0;  // dense neurons or conv output channels
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Feed-forward architecture plus the knobs shared by every layer.
//
// Layer strings follow the usual shorthand: "100" is a dense layer,
// "8c5s2" eight 5x5 filters with stride 2 ("p1" suffix adds padding),
// "p2s2" a 2x2 min pooling with stride 2. Layers are joined with '-'.
struct NetworkSpec {
  Shape3 input;
  std::vector<LayerSpec> layers;
  KernelSpec kernel;
  double q = 1.0;   // inhibition quantile; 1 is the slow regime
  int nu = 0;       // long-term memory length on hidden layers
  bool inhibit_input = true;
  bool floor_pooling = true;

  static NetworkSpec parse(Shape3 input, std::string_view layers);
  std::string layers_string() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Architectures of the benchmark datasets: "mnist", "cifar10", "nmnist",
// "dvs-gesture", "gsc". Kernel/q/nu keep their defaults except gsc (nu = 25).
NetworkSpec architecture_preset(std::string_view name);

using DelayLayer = std::variant<DenseDelayLayer, ConvDelayLayer, MinPoolLayer>;

struct Stage {
  DelayLayer layer;
  bool inhibit = false;     // temporal ReLU on the stage output
  LongTermMemory memory;    // nu == 0 on the output stage and pooling
};

// What the backward pass needs from one stage of one sample.
struct StageTape {
  Matrix input;
  Matrix raw;            // before standardization
  VectorXd stdev;        // per frame
  Matrix standardized;
  Matrix active;         // after the temporal ReLU
  Matrix output;         // after long-term memory
  std::vector<std::int32_t> argmin;
  std::uint64_t clipped = 0;
};

struct ForwardTape {
  Matrix input;  // frames after input inhibition
  std::vector<StageTape> stages;
  const Matrix& output() const { return stages.back().output; }
};

enum class ParamKind { kSignedDelay, kSigma, kAlpha };

struct ParamView {
  std::string name;
  ParamKind kind;
  std::size_t stage;
  std::span<double> values;
};

using NetworkGradients = std::vector<LayerGradients>;

class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, std::uint32_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::vector<Stage>& stages() { return stages_; }
  const std::vector<Stage>& stages() const { return stages_; }
  Index outputs() const;

  // frames: M x input size, standardized, +inf for silent entries.
  // Returns the M x K standardized output times.
  Matrix forward(const Matrix& frames, ForwardTape* tape = nullptr) const;

  // Accumulates dL/dparams for one sample into `grads` (created with
  // zero_gradients()). g_output is dL/d(output times), M x K.
  void backward(const ForwardTape& tape, const Matrix& g_output,
                NetworkGradients& grads) const;

  NetworkGradients zero_gradients() const;
  // Converts accumulated effective-weight gradients into delay gradients.
  // Call once after all samples of a batch have been accumulated.
  void resolve(NetworkGradients& grads) const;

  std::vector<ParamView> parameters();
  static std::vector<ParamView> gradient_views(const Network& net,
                                               NetworkGradients& grads);

  // Rebuilds per-layer caches after parameters were modified.
  void refresh();

  // Learnable delay parameters (signed delays, plus alpha when nu > 0);
  // sigma is counted only when asked.
  Index parameter_count(bool with_sigma = false) const;

 private:
  NetworkSpec spec_;
  std::vector<Stage> stages_;
};

// One-sample convenience wrappers.
Matrix network_forward(const Network& net, const Matrix& frames,
                       ForwardTape* tape = nullptr);
NetworkGradients network_backward(const Network& net, const ForwardTape& tape,
                                  const Matrix& g_output);

// Applies the temporal ReLU to every frame (row).
Matrix inhibit_frames(const Matrix& z, double q);

// Standardizes every frame (row) independently.
Matrix standardize_frames(const Matrix& t, VectorXd* stdev = nullptr);

}  // namespace denn

#endif  // DENN_NETWORK_HPP_
