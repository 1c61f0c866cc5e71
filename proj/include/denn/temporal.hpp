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

// Scalar temporal math of delay networks: the Gaussian delay map, spike
// kernels, the corrected synaptic activity and its closed-form partials,
// per-layer standardization and the temporal ReLU.
//
// Everything here is a pure function templated on the scalar type so the same
// code serves double-precision training and extended-precision oracles.

#ifndef DENN_TEMPORAL_HPP_
#define DENN_TEMPORAL_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "denn/types.hpp"

namespace denn {

enum class KernelKind { kExponential, kInverse };

// Strictly decreasing positive spike kernel. The inverse kernel shifts its
// argument by `inverse_shift` and clips it below at `inverse_floor`.
struct KernelSpec {
  KernelKind kind = KernelKind::kExponential;
  double inverse_shift = 3.0;
  double inverse_floor = 1e-3;

  static KernelSpec exponential() { return {}; }
  static KernelSpec inverse() { return {KernelKind::kInverse, 3.0, 1e-3}; }
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline std::string to_string(KernelKind kind) {
  return kind == KernelKind::kExponential ? "exponential" : "inverse";
}

// Smallest value sigma is allowed to take after an optimizer step.
inline constexpr double kSigmaFloor = 1e-3;

// Standardization refuses layers whose spread is below this.
inline constexpr double kMinSpread = 1e-12;

template <typename Scalar>
constexpr Scalar sign(Scalar x) {
  return static_cast<Scalar>((x > Scalar(0)) - (x < Scalar(0)));
}

template <typename Scalar>
Scalar kernel_value(const KernelSpec& kernel, Scalar x) {
  using std::exp;
  using std::max;
  if (is_silent(x)) return Scalar(0);
  if (kernel.kind == KernelKind::kExponential) return exp(-x);
  const Scalar arg = max(x + Scalar(kernel.inverse_shift),
                         Scalar(kernel.inverse_floor));
  return Scalar(1) / arg;
}

// d kappa / dx. Zero inside the clipped region of the inverse kernel.
template <typename Scalar>
Scalar kernel_derivative(const KernelSpec& kernel, Scalar x) {
  using std::exp;
  if (is_silent(x)) return Scalar(0);
  if (kernel.kind == KernelKind::kExponential) return -exp(-x);
  const Scalar arg = x + Scalar(kernel.inverse_shift);
  if (!(arg > Scalar(kernel.inverse_floor))) return Scalar(0);
  return Scalar(-1) / (arg * arg);
}

// True when the inverse kernel clips `x`. Used to keep gradient probes away
// from the kink.
template <typename Scalar>
bool kernel_clips(const KernelSpec& kernel, Scalar x) {
  return kernel.kind == KernelKind::kInverse && !is_silent(x) &&
         !(x + Scalar(kernel.inverse_shift) > Scalar(kernel.inverse_floor));
}

template <typename Scalar>
Scalar delay_from_signed(Scalar d_signed, Scalar sigma) {
  using std::exp;
  if (!(sigma > Scalar(0))) {
    throw std::domain_error("delay_from_signed: sigma must be positive");
  }
  const Scalar ratio = d_signed / sigma;
  return exp(-ratio * ratio);
}

// 1 - d without the cancellation of evaluating d first.
template <typename Scalar>
Scalar delay_gap(Scalar d_signed, Scalar sigma) {
  using std::expm1;
  const Scalar ratio = d_signed / sigma;
  return -expm1(-ratio * ratio);
}

// kappa(z + d) - kappa(z + 1) for live z, given gap = 1 - d. Both kernels
// are rewritten so the difference is formed from the gap directly; for
// d close to 1 the naive difference loses most of its digits.
template <typename Scalar>
Scalar kernel_difference(const KernelSpec& kernel, Scalar z, Scalar d,
                         Scalar gap) {
  using std::exp;
  using std::expm1;
  if (kernel.kind == KernelKind::kExponential) {
    return exp(-(z + Scalar(1))) * expm1(gap);
  }
  const Scalar a = z + d + Scalar(kernel.inverse_shift);
  const Scalar b = z + Scalar(1) + Scalar(kernel.inverse_shift);
  const Scalar floor = Scalar(kernel.inverse_floor);
  if (a > floor && b > floor) return gap / (a * b);
  return kernel_value(kernel, z + d) - kernel_value(kernel, z + Scalar(1));
}

// kappa'(z + d) - kappa'(z + 1), same treatment.
template <typename Scalar>
Scalar kernel_slope_difference(const KernelSpec& kernel, Scalar z, Scalar d,
                               Scalar gap) {
  if (kernel.kind == KernelKind::kExponential) {
    return -kernel_difference(kernel, z, d, gap);
  }
  const Scalar a = z + d + Scalar(kernel.inverse_shift);
  const Scalar b = z + Scalar(1) + Scalar(kernel.inverse_shift);
  const Scalar floor = Scalar(kernel.inverse_floor);
  if (a > floor && b > floor) return -gap * (a + b) / (a * a * b * b);
  return kernel_derivative(kernel, z + d) -
         kernel_derivative(kernel, z + Scalar(1));
}

// sign(d^s) [kappa(z + d) - kappa(z + 1)]; exactly zero for a silent
// presynaptic neuron or a zero signed delay.
template <typename Scalar>
Scalar synaptic_activity(Scalar z_pre, Scalar d_signed, Scalar sigma,
                         const KernelSpec& kernel) {
  const Scalar delay = delay_from_signed(d_signed, sigma);
  if (is_silent(z_pre) || d_signed == Scalar(0)) return Scalar(0);
  return sign(d_signed) *
         kernel_difference(kernel, z_pre, delay, delay_gap(d_signed, sigma));
}

template <typename Scalar>
struct ActivityPartials {
  Scalar d_signed = 0;
  Scalar sigma = 0;
  Scalar z_pre = 0;
};

template <typename Scalar>
ActivityPartials<Scalar> activity_partials(Scalar z_pre, Scalar d_signed,
                                           Scalar sigma,
                                           const KernelSpec& kernel) {
  ActivityPartials<Scalar> out;
  if (is_silent(z_pre) || d_signed == Scalar(0)) return out;
  const Scalar s = sign(d_signed);
  const Scalar delay = delay_from_signed(d_signed, sigma);
  const Scalar slope = kernel_derivative(kernel, z_pre + delay);
  const Scalar sigma2 = sigma * sigma;
  out.d_signed = s * slope * delay * (Scalar(-2) * d_signed / sigma2);
  out.sigma = s * slope * delay * (Scalar(2) * d_signed * d_signed /
                                   (sigma2 * sigma));
  out.z_pre = s * kernel_slope_difference(kernel, z_pre, delay,
                                          delay_gap(d_signed, sigma));
  return out;
}

// Result of standardizing one layer. Silent entries stay +inf and are
// excluded from the statistics.
template <typename Scalar>
struct Standardized {
  Vector<Scalar> values;
  Scalar mean = 0;
  Scalar stdev = 1;
  Index live = 0;
};

template <typename Derived>
Standardized<typename Derived::Scalar> standardize(
    const Eigen::MatrixBase<Derived>& t) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  Standardized<Scalar> out;
  Scalar sum = 0;
  Index live = 0;
  for (Index i = 0; i < t.size(); ++i) {
    if (is_silent(t(i))) continue;
    sum += t(i);
    ++live;
  }
  if (live < 2) {
    throw DegenerateLayerError("standardize: fewer than two live neurons");
  }
  const Scalar mean = sum / Scalar(live);
  Scalar ss = 0;
  for (Index i = 0; i < t.size(); ++i) {
    if (is_silent(t(i))) continue;
    const Scalar c = t(i) - mean;
    ss += c * c;
  }
  const Scalar stdev = sqrt(ss / Scalar(live));
  if (!(stdev >= Scalar(kMinSpread))) {
    throw DegenerateLayerError("standardize: layer has no spread");
  }
  out.values.resize(t.size());
  for (Index i = 0; i < t.size(); ++i) {
    out.values(i) = is_silent(t(i)) ? kSilent<Scalar> : (t(i) - mean) / stdev;
  }
  out.mean = mean;
  out.stdev = stdev;
  out.live = live;
  return out;
}

// Linearly interpolated empirical quantile of the live entries.
template <typename Derived>
typename Derived::Scalar live_quantile(const Eigen::MatrixBase<Derived>& z,
                                       double q) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> live;
  live.reserve(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) {
    if (!is_silent(z(i))) live.push_back(z(i));
  }
  if (live.empty()) return kSilent<Scalar>;
  std::sort(live.begin(), live.end());
  const double pos = q * static_cast<double>(live.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, live.size() - 1);
  const Scalar frac = Scalar(pos - static_cast<double>(lo));
  return live[lo] + frac * (live[hi] - live[lo]);
}

// Lateral inhibition: entries strictly above the q-quantile of the layer
// become silent. q = 1 is the identity.
template <typename Derived>
Vector<typename Derived::Scalar> temp_relu(const Eigen::MatrixBase<Derived>& z,
                                           double q) {
  using Scalar = typename Derived::Scalar;
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::domain_error("temp_relu: quantile must lie in (0, 1]");
  }
  Vector<Scalar> out = z;
  if (q >= 1.0) return out;
  const Scalar threshold = live_quantile(z, q);
  for (Index i = 0; i < out.size(); ++i) {
    if (!is_silent(out(i)) && out(i) > threshold) out(i) = kSilent<Scalar>;
  }
  return out;
}

// Long-term memory correction term sign(delta) (exp(-|delta|) - 1) and its
// derivative -exp(-|delta|).
template <typename Scalar>
Scalar memory_term(Scalar delta) {
  using std::abs;
  using std::exp;
  return sign(delta) * (exp(-abs(delta)) - Scalar(1));
}

template <typename Scalar>
Scalar memory_term_derivative(Scalar delta) {
  using std::abs;
  using std::exp;
  return -exp(-abs(delta));
}

}  // namespace denn

#endif  // DENN_TEMPORAL_HPP_
