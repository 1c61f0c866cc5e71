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

#include "denn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace denn {

namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ull;
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  }
  void add_mask(const Matrix& m) {
    add(static_cast<std::uint64_t>(m.size()));
    std::uint64_t word = 0;
    for (Index i = 0; i < m.size(); ++i) {
      word = (word << 1) | static_cast<std::uint64_t>(is_silent(m.data()[i]));
      if (i % 64 == 63) {
        add(word);
        word = 0;
      }
    }
    add(word);
  }
};

}  // namespace

double total_loss(const Network& net, const std::vector<Sample>& samples) {
  double loss = 0;
  for (const auto& s : samples) {
    loss += cross_entropy(net.forward(s.frames), s.label).loss;
  }
  return loss;
}

std::uint64_t structure_signature(const Network& net,
                                  const std::vector<Sample>& samples) {
  Fnv fnv;
  ForwardTape tape;
  for (const auto& s : samples) {
    net.forward(s.frames, &tape);
    fnv.add_mask(tape.input);
    for (const auto& st : tape.stages) {
      if (st.active.size() > 0) fnv.add_mask(st.active);
      for (auto a : st.argmin) fnv.add(static_cast<std::uint64_t>(a));
      fnv.add(st.clipped);
    }
    fnv.add(cross_entropy(tape.output(), s.label).clipped);
  }
  return fnv.h;
}

GradcheckReport gradcheck(Network& net, const std::vector<Sample>& samples,
                          const GradcheckOptions& options) {
  GradcheckReport report;
  NetworkGradients grads = net.zero_gradients();
  ForwardTape tape;
  for (const auto& s : samples) {
    net.forward(s.frames, &tape);
    const LossResult r = cross_entropy(tape.output(), s.label);
    net.backward(tape, r.grad, grads);
  }
  net.resolve(grads);
  const auto analytic = Network::gradient_views(net, grads);
  auto params = net.parameters();
  const std::uint64_t base = structure_signature(net, samples);
  std::mt19937 rng(options.seed);
  for (std::size_t k = 0; k < params.size(); ++k) {
    std::vector<std::size_t> entries(params[k].values.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (options.max_entries_per_tensor > 0 &&
        entries.size() > options.max_entries_per_tensor) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_tensor);
      std::sort(entries.begin(), entries.end());
    }
    for (std::size_t e : entries) {
      double& x = params[k].values[e];
      const double saved = x;
      x = saved + options.step;
      net.refresh();
      const std::uint64_t sig_plus = structure_signature(net, samples);
      const double plus = total_loss(net, samples);
      x = saved - options.step;
      net.refresh();
      const std::uint64_t sig_minus = structure_signature(net, samples);
      const double minus = total_loss(net, samples);
      x = saved;
      net.refresh();
      if (sig_plus != base || sig_minus != base) {
        ++report.rejected;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[k].values[e];
      const double abs_err = std::abs(a - numeric);
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = abs_err / denom;
      ++report.checked;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = params[k].name + "[" + std::to_string(e) + "]";
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

namespace {

// Uniform base values keep standardized inputs within +-sqrt(3), which keeps
// the shifted inverse kernel well clear of its clip floor where the third
// derivative (and so the finite-difference error) explodes.
Matrix random_frames(std::mt19937& rng, Index frames, Index size,
                     double silent_fraction) {
  std::uniform_real_distribution<double> base(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(frames, size);
  for (Index f = 0; f < frames; ++f) {
    VectorXd t(size);
    for (;;) {
      Index live = 0;
      for (Index i = 0; i < size; ++i) {
        t(i) = unit(rng) < silent_fraction ? kSilent<double> : base(rng);
        live += !is_silent(t(i));
      }
      if (live >= std::max<Index>(2, size / 2)) break;
    }
    out.row(f) = standardize(t).values.transpose();
  }
  return out;
}

}  // namespace

GradcheckCase make_gradcheck_case(std::uint32_t seed, int index,
                                  const CaseFilter& filter) {
  std::mt19937 rng(seed + 7919u * static_cast<std::uint32_t>(index));
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const bool conv = filter.conv.value_or(index & 1);
  const KernelKind kernel = filter.kernel.value_or(
      (index >> 1) & 1 ? KernelKind::kInverse : KernelKind::kExponential);
  const double q = filter.q.value_or((index >> 2) & 1 ? 0.5 : 1.0);
  const int nu = filter.nu.value_or((index >> 3) & 1 ? 2 : 0);

  GradcheckCase c;
  const int classes = pick(3, 4);
  std::string layers;
  if (conv) {
    const int size = pick(6, 7);
    c.spec.input = {pick(1, 2), size, size};
    layers = std::to_string(pick(2, 4)) + (pick(0, 1) ? "c3s1-p2s2-" : "c3s2-") +
             std::to_string(classes);
  } else {
    c.spec.input = {1, 1, pick(6, 12)};
    layers = std::to_string(pick(4, 8)) + "-";
    if (pick(0, 1)) layers += std::to_string(pick(4, 8)) + "-";
    layers += std::to_string(classes);
  }
  c.spec.layers = NetworkSpec::parse(c.spec.input, layers).layers;
  c.spec.kernel = kernel == KernelKind::kInverse ? KernelSpec::inverse()
                                                 : KernelSpec::exponential();
  c.spec.q = q;
  c.spec.nu = nu;
  c.seed = rng();
  c.name = std::string(conv ? "conv " : "dense ") + to_string(c.spec.input) +
           " " + layers + " " + to_string(kernel) + " q=" +
           (q < 1 ? "0.5" : "1") + " nu=" + std::to_string(nu);
  const Index frames = nu > 0 ? 4 : pick(1, 2);
  for (int s = 0; s < 2; ++s) {
    Sample sample;
    sample.frames = random_frames(rng, frames, c.spec.input.size(), 0.15);
    sample.label = pick(0, classes - 1);
    c.samples.push_back(std::move(sample));
  }
  return c;
}

SuiteReport run_gradcheck_suite(int count, std::uint32_t seed,
                                const CaseFilter& filter,
                                const GradcheckOptions& options) {
  SuiteReport suite;
  for (int i = 0; i < count; ++i) {
    GradcheckCase c = make_gradcheck_case(seed, i, filter);
    Network net(c.spec, c.seed);
    // Give the memory coefficients something to do.
    std::mt19937 rng(c.seed ^ 0x9e3779b9u);
    std::uniform_real_distribution<double> alpha(-1.0, 1.0);
    for (auto& stage : net.stages()) {
      for (Index k = 0; k < stage.memory.alpha_raw.size(); ++k) {
        stage.memory.alpha_raw.data()[k] = alpha(rng);
      }
    }
    GradcheckReport r;
    try {
      r = gradcheck(net, c.samples, options);
    } catch (const DegenerateLayerError&) {
      continue;
    } catch (const DegeneratePosteriorError&) {
      continue;
    }
    suite.max_rel_error = std::max(suite.max_rel_error, r.max_rel_error);
    suite.checked += r.checked;
    suite.rejected += r.rejected;
    suite.cases.emplace_back(c.name, r);
  }
  return suite;
}

}  // namespace denn
