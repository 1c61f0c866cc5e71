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

#include "denn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace denn {

namespace {

void add_into(Matrix& dst, const Matrix& src) {
  if (src.size() == 0) return;
  if (dst.size() == 0) {
    dst = src;
  } else {
    dst += src;
  }
}

void add_into(VectorXd& dst, const VectorXd& src) {
  if (src.size() == 0) return;
  if (dst.size() == 0) {
    dst = src;
  } else {
    dst += src;
  }
}

// sigma_of(r, c) gives the sigma governing the synapse stored at (r, c).
template <typename SigmaOf>
DelayCache build_cache(const Matrix& signed_delays, SigmaOf sigma_of) {
  DelayCache c;
  const Index rows = signed_delays.rows();
  const Index cols = signed_delays.cols();
  c.delay.resize(rows, cols);
  c.gap.resize(rows, cols);
  c.sign.resize(rows, cols);
  c.ddelay_dsigned.resize(rows, cols);
  c.ddelay_dsigma.resize(rows, cols);
  c.weight.resize(rows, cols);
  c.dweight_dsigned.resize(rows, cols);
  c.dweight_dsigma.resize(rows, cols);
  const double e1 = std::exp(-1.0);
  for (Index r = 0; r < rows; ++r) {
    for (Index col = 0; col < cols; ++col) {
      const double ds = signed_delays(r, col);
      const double sigma = sigma_of(r, col);
      const double d = delay_from_signed(ds, sigma);
      const double s = sign(ds);
      const double sigma2 = sigma * sigma;
      const double dd_ds = d * (-2.0 * ds / sigma2);
      const double dd_dsigma = d * (2.0 * ds * ds / (sigma2 * sigma));
      const double ed = std::exp(-d);
      const double gap = delay_gap(ds, sigma);
      c.delay(r, col) = d;
      c.gap(r, col) = gap;
      c.sign(r, col) = s;
      c.ddelay_dsigned(r, col) = s * dd_ds;
      c.ddelay_dsigma(r, col) = s * dd_dsigma;
      c.weight(r, col) = s * e1 * std::expm1(gap);
      c.dweight_dsigned(r, col) = -s * ed * dd_ds;
      c.dweight_dsigma(r, col) = -s * ed * dd_dsigma;
    }
  }
  return c;
}

std::vector<Index> live_indices(const Eigen::Ref<const VectorXd>& z) {
  std::vector<Index> live;
  live.reserve(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) {
    if (!is_silent(z(i))) live.push_back(i);
  }
  return live;
}

}  // namespace

void LayerGradients::set_zero() {
  signed_delays.setZero();
  sigma.setZero();
  alpha_raw.setZero();
  weight.setZero();
}

LayerGradients& LayerGradients::operator+=(const LayerGradients& other) {
  add_into(signed_delays, other.signed_delays);
  add_into(sigma, other.sigma);
  add_into(alpha_raw, other.alpha_raw);
  add_into(weight, other.weight);
  return *this;
}

// ---------------------------------------------------------------------------
// DenseDelayLayer

DenseDelayLayer::DenseDelayLayer(Index inputs, Index outputs, KernelSpec k)
    : signed_delays(Matrix::Zero(inputs, outputs)),
      sigma(VectorXd::Ones(outputs)),
      kernel(k) {
  if (inputs <= 0 || outputs <= 0) {
    throw ShapeError("DenseDelayLayer: empty layer");
  }
  refresh();
}

void DenseDelayLayer::initialize(std::mt19937& rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(inputs()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < signed_delays.size(); ++i) {
    signed_delays.data()[i] = dist(rng);
  }
  sigma.setOnes();
  refresh();
}

void DenseDelayLayer::refresh() {
  cache_ = build_cache(signed_delays,
                       [this](Index, Index j) { return sigma(j); });
}

LayerGradients DenseDelayLayer::zero_gradients() const {
  LayerGradients g;
  g.signed_delays = Matrix::Zero(inputs(), outputs());
  g.sigma = VectorXd::Zero(outputs());
  if (kernel.kind == KernelKind::kExponential) {
    g.weight = Matrix::Zero(inputs(), outputs());
  }
  return g;
}

Matrix DenseDelayLayer::raw_times(const Matrix& z_in,
                                  std::uint64_t* clipped) const {
  if (z_in.cols() != inputs()) {
    throw ShapeError("dense layer expects " + std::to_string(inputs()) +
                     " inputs, got " + std::to_string(z_in.cols()));
  }
  Matrix out = Matrix::Zero(z_in.rows(), outputs());
  for (Index f = 0; f < z_in.rows(); ++f) {
    const auto live = live_indices(z_in.row(f).transpose());
    if (kernel.kind == KernelKind::kExponential) {
      for (Index i : live) {
        out.row(f).noalias() += std::exp(-z_in(f, i)) * cache_.weight.row(i);
      }
      continue;
    }
    for (Index i : live) {
      const double z = z_in(f, i);
      if (clipped && kernel_clips(kernel, z + 1.0)) ++*clipped;
      for (Index j = 0; j < outputs(); ++j) {
        const double s = cache_.sign(i, j);
        if (s == 0.0) continue;
        const double d = cache_.delay(i, j);
        if (clipped && kernel_clips(kernel, z + d)) ++*clipped;
        out(f, j) += s * kernel_difference(kernel, z, d, cache_.gap(i, j));
      }
    }
  }
  return out;
}

Matrix DenseDelayLayer::backward(const Matrix& z_in, const Matrix& g_raw,
                                 LayerGradients& grads,
                                 bool want_input) const {
  Matrix g_in;
  if (want_input) g_in = Matrix::Zero(z_in.rows(), z_in.cols());
  for (Index f = 0; f < z_in.rows(); ++f) {
    const auto live = live_indices(z_in.row(f).transpose());
    if (kernel.kind == KernelKind::kExponential) {
      for (Index i : live) {
        const double u = std::exp(-z_in(f, i));
        grads.weight.row(i).noalias() += u * g_raw.row(f);
        if (want_input) {
          g_in(f, i) = -u * cache_.weight.row(i).dot(g_raw.row(f));
        }
      }
      continue;
    }
    for (Index i : live) {
      const double z = z_in(f, i);
      double acc = 0.0;
      for (Index j = 0; j < outputs(); ++j) {
        const double s = cache_.sign(i, j);
        if (s == 0.0) continue;
        const double g = g_raw(f, j);
        const double d = cache_.delay(i, j);
        const double slope = kernel_derivative(kernel, z + d);
        grads.signed_delays(i, j) += g * slope * cache_.ddelay_dsigned(i, j);
        grads.sigma(j) += g * slope * cache_.ddelay_dsigma(i, j);
        acc += g * s * kernel_slope_difference(kernel, z, d, cache_.gap(i, j));
      }
      if (want_input) g_in(f, i) = acc;
    }
  }
  return g_in;
}

void DenseDelayLayer::resolve(LayerGradients& grads) const {
  if (grads.weight.size() == 0) return;
  grads.signed_delays.array() +=
      grads.weight.array() * cache_.dweight_dsigned.array();
  grads.sigma +=
      (grads.weight.array() * cache_.dweight_dsigma.array()).colwise().sum()
          .transpose()
          .matrix();
  grads.weight.setZero();
}

// ---------------------------------------------------------------------------
// ConvDelayLayer

ConvDelayLayer::ConvDelayLayer(Shape3 input, int out_channels,
                               int kernel_size, int stride, int padding,
                               KernelSpec k)
    : kernel(k), input_(input), k_(kernel_size), stride_(stride),
      pad_(padding) {
  if (out_channels <= 0 || kernel_size <= 0 || stride <= 0 || padding < 0) {
    throw ShapeError("ConvDelayLayer: invalid hyperparameters");
  }
  const int span_h = input.height + 2 * padding - kernel_size;
  const int span_w = input.width + 2 * padding - kernel_size;
  if (span_h < 0 || span_w < 0) {
    throw ShapeError("ConvDelayLayer: kernel " + std::to_string(kernel_size) +
                     " larger than padded input " + to_string(input));
  }
  output_ = {out_channels, span_h / stride + 1, span_w / stride + 1};
  signed_delays = Matrix::Zero(out_channels, patch_size());
  sigma = VectorXd::Ones(out_channels);

  const Index positions = static_cast<Index>(output_.height) * output_.width;
  sources_.assign(static_cast<std::size_t>(positions * patch_size()), -1);
  for (int oy = 0; oy < output_.height; ++oy) {
    for (int ox = 0; ox < output_.width; ++ox) {
      const Index p = static_cast<Index>(oy) * output_.width + ox;
      Index e = 0;
      for (int c = 0; c < input.channels; ++c) {
        for (int ky = 0; ky < k_; ++ky) {
          for (int kx = 0; kx < k_; ++kx, ++e) {
            const int iy = oy * stride_ - pad_ + ky;
            const int ix = ox * stride_ - pad_ + kx;
            if (iy < 0 || ix < 0 || iy >= input.height || ix >= input.width) {
              continue;
            }
            sources_[static_cast<std::size_t>(p * patch_size() + e)] =
                (static_cast<Index>(c) * input.height + iy) * input.width + ix;
          }
        }
      }
    }
  }
  refresh();
}

Index ConvDelayLayer::source_index(Index position, Index patch_entry) const {
  return sources_[static_cast<std::size_t>(position * patch_size() +
                                           patch_entry)];
}

void ConvDelayLayer::initialize(std::mt19937& rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(patch_size()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < signed_delays.size(); ++i) {
    signed_delays.data()[i] = dist(rng);
  }
  sigma.setOnes();
  refresh();
}

void ConvDelayLayer::refresh() {
  cache_ = build_cache(signed_delays,
                       [this](Index c, Index) { return sigma(c); });
}

LayerGradients ConvDelayLayer::zero_gradients() const {
  LayerGradients g;
  g.signed_delays = Matrix::Zero(signed_delays.rows(), signed_delays.cols());
  g.sigma = VectorXd::Zero(sigma.size());
  if (kernel.kind == KernelKind::kExponential) {
    g.weight = Matrix::Zero(signed_delays.rows(), signed_delays.cols());
  }
  return g;
}

Matrix ConvDelayLayer::unfold_urgency(
    const Eigen::Ref<const VectorXd>& z) const {
  VectorXd u(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    u(i) = is_silent(z(i)) ? 0.0 : std::exp(-z(i));
  }
  const Index positions = static_cast<Index>(output_.height) * output_.width;
  Matrix patches(positions, patch_size());
  const Index* src = sources_.data();
  for (Index p = 0; p < positions; ++p) {
    for (Index e = 0; e < patch_size(); ++e, ++src) {
      patches(p, e) = *src < 0 ? 0.0 : u(*src);
    }
  }
  return patches;
}

Matrix ConvDelayLayer::raw_times(const Matrix& z_in,
                                 std::uint64_t* clipped) const {
  if (z_in.cols() != input_.size()) {
    throw ShapeError("conv layer expects input " + to_string(input_));
  }
  const Index positions = static_cast<Index>(output_.height) * output_.width;
  const Index channels = output_.channels;
  Matrix out = Matrix::Zero(z_in.rows(), output_.size());
  for (Index f = 0; f < z_in.rows(); ++f) {
    Eigen::Map<Matrix> maps(out.row(f).data(), channels, positions);
    if (kernel.kind == KernelKind::kExponential) {
      const Matrix patches = unfold_urgency(z_in.row(f).transpose());
      maps.noalias() = cache_.weight * patches.transpose();
      continue;
    }
    const auto z = z_in.row(f);
    for (Index p = 0; p < positions; ++p) {
      for (Index e = 0; e < patch_size(); ++e) {
        const Index src = source_index(p, e);
        if (src < 0 || is_silent(z(src))) continue;
        const double zi = z(src);
        if (clipped && kernel_clips(kernel, zi + 1.0)) ++*clipped;
        for (Index c = 0; c < channels; ++c) {
          const double s = cache_.sign(c, e);
          if (s == 0.0) continue;
          const double d = cache_.delay(c, e);
          if (clipped && kernel_clips(kernel, zi + d)) ++*clipped;
          maps(c, p) += s * kernel_difference(kernel, zi, d, cache_.gap(c, e));
        }
      }
    }
  }
  return out;
}

Matrix ConvDelayLayer::backward(const Matrix& z_in, const Matrix& g_raw,
                                LayerGradients& grads,
                                bool want_input) const {
  const Index positions = static_cast<Index>(output_.height) * output_.width;
  const Index channels = output_.channels;
  Matrix g_in;
  if (want_input) g_in = Matrix::Zero(z_in.rows(), z_in.cols());
  for (Index f = 0; f < z_in.rows(); ++f) {
    Eigen::Map<const Matrix> g_maps(g_raw.row(f).data(), channels, positions);
    const auto z = z_in.row(f);
    if (kernel.kind == KernelKind::kExponential) {
      const Matrix patches = unfold_urgency(z.transpose());
      grads.weight.noalias() += g_maps * patches;
      if (!want_input) continue;
      const Matrix g_patches = g_maps.transpose() * cache_.weight;
      VectorXd g_u = VectorXd::Zero(z_in.cols());
      for (Index p = 0; p < positions; ++p) {
        for (Index e = 0; e < patch_size(); ++e) {
          const Index src = source_index(p, e);
          if (src >= 0) g_u(src) += g_patches(p, e);
        }
      }
      for (Index i = 0; i < z_in.cols(); ++i) {
        if (!is_silent(z(i))) g_in(f, i) = -std::exp(-z(i)) * g_u(i);
      }
      continue;
    }
    for (Index p = 0; p < positions; ++p) {
      for (Index e = 0; e < patch_size(); ++e) {
        const Index src = source_index(p, e);
        if (src < 0 || is_silent(z(src))) continue;
        const double zi = z(src);
        double acc = 0.0;
        for (Index c = 0; c < channels; ++c) {
          const double s = cache_.sign(c, e);
          if (s == 0.0) continue;
          const double g = g_maps(c, p);
          const double d = cache_.delay(c, e);
          const double slope = kernel_derivative(kernel, zi + d);
          grads.signed_delays(c, e) += g * slope * cache_.ddelay_dsigned(c, e);
          grads.sigma(c) += g * slope * cache_.ddelay_dsigma(c, e);
          acc += g * s * kernel_slope_difference(kernel, zi, d, cache_.gap(c, e));
        }
        if (want_input) g_in(f, src) += acc;
      }
    }
  }
  return g_in;
}

void ConvDelayLayer::resolve(LayerGradients& grads) const {
  if (grads.weight.size() == 0) return;
  grads.signed_delays.array() +=
      grads.weight.array() * cache_.dweight_dsigned.array();
  grads.sigma +=
      (grads.weight.array() * cache_.dweight_dsigma.array()).rowwise().sum()
          .matrix();
  grads.weight.setZero();
}

// ---------------------------------------------------------------------------
// MinPoolLayer

MinPoolLayer::MinPoolLayer(Shape3 input, bool floor_mode)
    : input_(input), floor_mode_(floor_mode) {
  if (!floor_mode && (input.height % 2 != 0 || input.width % 2 != 0)) {
    throw ShapeError("minpool: odd spatial size " + to_string(input));
  }
  output_ = {input.channels, input.height / 2, input.width / 2};
  if (output_.height == 0 || output_.width == 0) {
    throw ShapeError("minpool: input " + to_string(input) + " too small");
  }
}

Matrix MinPoolLayer::forward(const Matrix& z_in,
                             std::vector<std::int32_t>* argmin) const {
  if (z_in.cols() != input_.size()) {
    throw ShapeError("minpool expects input " + to_string(input_));
  }
  const Index outputs = output_.size();
  Matrix out(z_in.rows(), outputs);
  if (argmin) argmin->assign(static_cast<std::size_t>(z_in.rows() * outputs), -1);
  for (Index f = 0; f < z_in.rows(); ++f) {
    for (int c = 0; c < output_.channels; ++c) {
      for (int oy = 0; oy < output_.height; ++oy) {
        for (int ox = 0; ox < output_.width; ++ox) {
          double best = kSilent<double>;
          std::int32_t where = -1;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const Index i = (static_cast<Index>(c) * input_.height +
                               2 * oy + dy) * input_.width + 2 * ox + dx;
              const double v = z_in(f, i);
              if (!is_silent(v) && (where < 0 || v < best)) {
                best = v;
                where = static_cast<std::int32_t>(i);
              }
            }
          }
          const Index o = (static_cast<Index>(c) * output_.height + oy) *
                              output_.width + ox;
          out(f, o) = best;
          if (argmin) (*argmin)[static_cast<std::size_t>(f * outputs + o)] = where;
        }
      }
    }
  }
  return out;
}

Matrix MinPoolLayer::backward(const std::vector<std::int32_t>& argmin,
                              const Matrix& g_out, Index frames) const {
  const Index outputs = output_.size();
  Matrix g_in = Matrix::Zero(frames, input_.size());
  for (Index f = 0; f < frames; ++f) {
    for (Index o = 0; o < outputs; ++o) {
      const auto where = argmin[static_cast<std::size_t>(f * outputs + o)];
      if (where >= 0) g_in(f, where) += g_out(f, o);
    }
  }
  return g_in;
}

// ---------------------------------------------------------------------------
// LongTermMemory

LongTermMemory::LongTermMemory(Index neurons, int nu)
    : alpha_raw(Matrix::Zero(neurons, std::max(nu, 0))) {}

Matrix LongTermMemory::forward(const Matrix& z) const {
  Matrix out = z;
  if (nu() == 0) return out;
  const Matrix alpha = alpha_raw.array().tanh().matrix();
  for (Index s = 1; s < z.rows(); ++s) {
    const Index lags = std::min<Index>(nu(), s);
    for (Index j = 0; j < z.cols(); ++j) {
      const double now = z(s, j);
      if (is_silent(now)) continue;
      double correction = 0.0;
      for (Index h = 1; h <= lags; ++h) {
        const double before = z(s - h, j);
        if (is_silent(before)) continue;
        correction += alpha(j, h - 1) * memory_term(now - before);
      }
      out(s, j) = now + correction;
    }
  }
  return out;
}

Matrix LongTermMemory::backward(const Matrix& z, const Matrix& g_out,
                                LayerGradients& grads) const {
  Matrix g_z = g_out;
  if (nu() == 0) return g_z;
  if (grads.alpha_raw.size() == 0) {
    grads.alpha_raw = Matrix::Zero(alpha_raw.rows(), alpha_raw.cols());
  }
  const Matrix alpha = alpha_raw.array().tanh().matrix();
  for (Index s = 1; s < z.rows(); ++s) {
    const Index lags = std::min<Index>(nu(), s);
    for (Index j = 0; j < z.cols(); ++j) {
      const double now = z(s, j);
      const double g = g_out(s, j);
      if (is_silent(now) || g == 0.0) continue;
      for (Index h = 1; h <= lags; ++h) {
        const double before = z(s - h, j);
        if (is_silent(before)) continue;
        const double delta = now - before;
        const double a = alpha(j, h - 1);
        const double slope = a * memory_term_derivative(delta);
        g_z(s, j) += g * slope;
        g_z(s - h, j) -= g * slope;
        grads.alpha_raw(j, h - 1) += g * memory_term(delta) * (1.0 - a * a);
      }
    }
  }
  return g_z;
}

}  // namespace denn
