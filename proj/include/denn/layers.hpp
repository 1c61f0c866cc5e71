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

// Delay layers. Every layer works on a whole sample at once: a row-major
// matrix with one frame per row and one neuron per column. Feature maps are
// flattened channel-major (c, y, x).
//
// With the exponential kernel the corrected activity factorizes as
//   sign(d^s) [e^{-(z+d)} - e^{-(z+1)}] = e^{-z} * sign(d^s) (e^{-d} - e^{-1})
// so the raw spike times of a layer are a product of the presynaptic
// "urgency" e^{-z} with an effective weight matrix derived from the delays.
// That matrix and its derivatives are cached by refresh(); call it after any
// change to signed_delays or sigma.

#ifndef DENN_LAYERS_HPP_
#define DENN_LAYERS_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "denn/temporal.hpp"
#include "denn/types.hpp"

namespace denn {

// Parameter gradients of one stage, shaped like the parameters themselves.
// `weight` accumulates gradients with respect to the cached effective weights
// of the exponential path; LayerGradients::resolve folds it into
// signed_delays and sigma.
struct LayerGradients {
  Matrix signed_delays;
  VectorXd sigma;
  Matrix alpha_raw;
  Matrix weight;

  void set_zero();
  LayerGradients& operator+=(const LayerGradients& other);
};

// Cached per-synapse quantities derived from (d^s, sigma).
struct DelayCache {
  Matrix delay;           // d
  Matrix gap;             // 1 - d
  Matrix sign;            // sign(d^s)
  Matrix ddelay_dsigned;  // sign * dd/dd^s
  Matrix ddelay_dsigma;   // sign * dd/dsigma
  Matrix weight;          // sign * (e^{-d} - e^{-1})        (exponential)
  Matrix dweight_dsigned;
  Matrix dweight_dsigma;
};

// Fully connected delay layer. signed_delays(i, j) connects presynaptic i to
// postsynaptic j.
class DenseDelayLayer {
 public:
  DenseDelayLayer() = default;
  DenseDelayLayer(Index inputs, Index outputs, KernelSpec kernel);

  Index inputs() const { return signed_delays.rows(); }
  Index outputs() const { return signed_delays.cols(); }

  // Uniform(-b, b) signed delays with b = sqrt(3 / n_in), sigma = 1.
  void initialize(std::mt19937& rng);
  void refresh();

  // z_in: frames x inputs. Returns frames x outputs raw spike times.
  // `clipped` (optional) counts inverse-kernel evaluations inside the clip.
  Matrix raw_times(const Matrix& z_in, std::uint64_t* clipped = nullptr) const;

  // Accumulates parameter gradients into `grads` and returns dL/dz_in
  // (left empty when `want_input` is false).
  Matrix backward(const Matrix& z_in, const Matrix& g_raw,
                  LayerGradients& grads, bool want_input = true) const;

  // Folds grads.weight into grads.signed_delays / grads.sigma.
  void resolve(LayerGradients& grads) const;

  LayerGradients zero_gradients() const;

  Matrix signed_delays;
  VectorXd sigma;
  KernelSpec kernel;

 private:
  DelayCache cache_;
};

// Convolutional delay layer with one sigma per output channel. Padding and
// silent inputs contribute nothing to the receptive field sum.
class ConvDelayLayer {
 public:
  ConvDelayLayer() = default;
  ConvDelayLayer(Shape3 input, int out_channels, int kernel_size, int stride,
                 int padding, KernelSpec kernel);

  const Shape3& input_shape() const { return input_; }
  const Shape3& output_shape() const { return output_; }
  int kernel_size() const { return k_; }
  int stride() const { return stride_; }
  int padding() const { return pad_; }
  Index patch_size() const {
    return static_cast<Index>(input_.channels) * k_ * k_;
  }

  void initialize(std::mt19937& rng);
  void refresh();

  Matrix raw_times(const Matrix& z_in, std::uint64_t* clipped = nullptr) const;
  Matrix backward(const Matrix& z_in, const Matrix& g_raw,
                  LayerGradients& grads, bool want_input = true) const;
  void resolve(LayerGradients& grads) const;
  LayerGradients zero_gradients() const;

  // Input index feeding (output position, patch entry), or -1 for padding.
  Index source_index(Index position, Index patch_entry) const;

  // Filter bank, one row per output channel: (C_out, C_in * k * k) with
  // patch entries ordered (c_in, ky, kx).
  Matrix signed_delays;
  VectorXd sigma;
  KernelSpec kernel;

 private:
  // Gathers e^{-z} into a (positions x patch) matrix.
  Matrix unfold_urgency(const Eigen::Ref<const VectorXd>& z) const;

  Shape3 input_;
  Shape3 output_;
  int k_ = 1;
  int stride_ = 1;
  int pad_ = 0;
  std::vector<Index> sources_;  // positions * patch, -1 for padding
  DelayCache cache_;
};

// 2x2 / stride 2 min pooling: the earliest spike of the window wins.
// In strict mode odd spatial sizes are rejected; floor mode drops the last
// row/column like a truncating pooling layer.
class MinPoolLayer {
 public:
  MinPoolLayer() = default;
  MinPoolLayer(Shape3 input, bool floor_mode);

  const Shape3& input_shape() const { return input_; }
  const Shape3& output_shape() const { return output_; }
  bool floor_mode() const { return floor_mode_; }

  // argmin receives, per frame and output, the winning input index (-1 when
  // the whole window is silent).
  Matrix forward(const Matrix& z_in, std::vector<std::int32_t>* argmin) const;
  Matrix backward(const std::vector<std::int32_t>& argmin, const Matrix& g_out,
                  Index frames) const;

 private:
  Shape3 input_;
  Shape3 output_;
  bool floor_mode_ = false;
};

// Long-term memory over the last nu frames of a layer:
//   z[s] += sum_h tanh(alpha_raw_h) * sign(delta_h) (exp(-|delta_h|) - 1),
//   delta_h = z[s] - z[s-h],
// where z[s-h] is the layer's inhibited output before its own memory
// correction. Lags before the first frame and lags whose earlier value is
// silent contribute nothing; silent current values pass through.
class LongTermMemory {
 public:
  LongTermMemory() = default;
  LongTermMemory(Index neurons, int nu);

  int nu() const { return static_cast<int>(alpha_raw.cols()); }
  Index neurons() const { return alpha_raw.rows(); }

  Matrix forward(const Matrix& z) const;
  // Accumulates into grads.alpha_raw and returns dL/dz.
  Matrix backward(const Matrix& z, const Matrix& g_out,
                  LayerGradients& grads) const;

  Matrix alpha_raw;  // neurons x nu, lag h stored in column h - 1
};

}  // namespace denn

#endif  // DENN_LAYERS_HPP_
