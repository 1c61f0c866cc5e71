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

#include "denn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace denn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

VectorXd finite_entries(const Eigen::Ref<const VectorXd>& v) {
  VectorXd out(v.size());
  Index n = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) out(n++) = v(i);
  }
  out.conservativeResize(n);
  return out;
}

}  // namespace

Matrix posterior_trace(const Network& net, const Matrix& frames) {
  const Matrix z = net.forward(frames);
  Matrix trace(z.rows(), z.cols());
  for (Index s = 0; s < z.rows(); ++s) {
    trace.row(s) = temporal_softmin(z.topRows(s + 1)).transpose();
  }
  return trace;
}

void write_posterior_csv(std::ostream& os, const Matrix& trace) {
  os << "frame";
  for (Index c = 0; c < trace.cols(); ++c) os << ",p" << c;
  os << '\n';
  for (Index s = 0; s < trace.rows(); ++s) {
    os << s;
    for (Index c = 0; c < trace.cols(); ++c) os << ',' << trace(s, c);
    os << '\n';
  }
}

std::vector<Matrix> delta_maps(const Network& net, const Matrix& frames) {
  ForwardTape tape;
  net.forward(frames, &tape);
  std::vector<Matrix> maps;
  for (std::size_t k = 0; k + 1 < tape.stages.size(); ++k) {
    if (std::holds_alternative<MinPoolLayer>(net.stages()[k].layer)) continue;
    const Matrix& z = tape.stages[k].output;
    Matrix d(std::max<Index>(z.rows() - 1, 0), z.cols());
    for (Index s = 1; s < z.rows(); ++s) {
      for (Index j = 0; j < z.cols(); ++j) {
        const double a = z(s, j), b = z(s - 1, j);
        d(s - 1, j) = is_silent(a) || is_silent(b) ? kNaN : a - b;
      }
    }
    maps.push_back(std::move(d));
  }
  return maps;
}

void write_delta_csv(std::ostream& os, const std::vector<Matrix>& maps) {
  os << "layer,frame,neuron,delta\n";
  for (std::size_t k = 0; k < maps.size(); ++k) {
    for (Index s = 0; s < maps[k].rows(); ++s) {
      for (Index j = 0; j < maps[k].cols(); ++j) {
        if (std::isnan(maps[k](s, j))) continue;
        os << k << ',' << s + 1 << ',' << j << ',' << maps[k](s, j) << '\n';
      }
    }
  }
}

double skewness(const Eigen::Ref<const VectorXd>& values) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 3) return kNaN;
  const double mean = values.mean();
  const double m2 = (values.array() - mean).square().sum() / n;
  const double m3 = (values.array() - mean).cube().sum() / n;
  if (m2 <= 0) return kNaN;
  return m3 / std::pow(m2, 1.5);
}

std::vector<Histogram> spike_time_histograms(const Network& net,
                                             const Dataset& data, int bins) {
  // Standardized per frame, so a fixed window of +-4 covers the bulk.
  constexpr double kRange = 4.0;
  std::vector<Histogram> hists;
  ForwardTape tape;
  for (const auto& sample : data.samples) {
    try {
      net.forward(sample.frames, &tape);
    } catch (const DegenerateLayerError&) {
      continue;
    }
    if (hists.empty()) {
      for (std::size_t k = 0; k < tape.stages.size(); ++k) {
        if (std::holds_alternative<MinPoolLayer>(net.stages()[k].layer)) continue;
        hists.push_back({k, -kRange, kRange,
                         std::vector<std::uint64_t>(static_cast<std::size_t>(bins))});
      }
    }
    for (auto& h : hists) {
      const Matrix& raw = tape.stages[h.stage].raw;
      for (Index f = 0; f < raw.rows(); ++f) {
        VectorXd t = finite_entries(raw.row(f).transpose());
        if (t.size() < 2) continue;
        const double mean = t.mean();
        const double sd = std::sqrt((t.array() - mean).square().mean());
        if (sd <= 0) continue;
        for (Index i = 0; i < t.size(); ++i) {
          const double u = (t(i) - mean) / sd;
          if (u < h.lo || u >= h.hi) continue;
          const auto b = static_cast<std::size_t>((u - h.lo) / (h.hi - h.lo) * bins);
          ++h.counts[std::min(b, h.counts.size() - 1)];
        }
      }
    }
  }
  return hists;
}

void write_histogram_csv(std::ostream& os, const std::vector<Histogram>& hists) {
  os << "layer,bin_lo,bin_hi,count\n";
  for (const auto& h : hists) {
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      os << h.stage << ',' << h.lo + width * static_cast<double>(b) << ','
         << h.lo + width * static_cast<double>(b + 1) << ',' << h.counts[b]
         << '\n';
    }
  }
}

Matrix class_skewness(const Network& net, const Dataset& data,
                      std::size_t stage) {
  int classes = data.classes;
  for (const auto& s : data.samples) classes = std::max(classes, s.label + 1);
  Matrix out = Matrix::Zero(classes, 2);
  ForwardTape tape;
  for (const auto& sample : data.samples) {
    try {
      net.forward(sample.frames, &tape);
    } catch (const DegenerateLayerError&) {
      continue;
    }
    if (stage >= tape.stages.size()) throw ShapeError("class_skewness: no such stage");
    const Matrix& raw = tape.stages[stage].raw;
    for (Index f = 0; f < raw.rows(); ++f) {
      const double g = skewness(finite_entries(raw.row(f).transpose()));
      if (std::isnan(g)) continue;
      out(sample.label, 0) += g;
      out(sample.label, 1) += 1;
    }
  }
  for (Index c = 0; c < out.rows(); ++c) {
    out(c, 0) = out(c, 1) > 0 ? out(c, 0) / out(c, 1) : kNaN;
  }
  return out;
}

void write_skewness_csv(std::ostream& os, const Matrix& skew) {
  os << "class,mean_skewness,frames\n";
  for (Index c = 0; c < skew.rows(); ++c) {
    os << c << ',' << skew(c, 0) << ',' << skew(c, 1) << '\n';
  }
}

std::vector<Matrix> synaptic_impact(const Network& net, const Dataset& data) {
  const auto* dense = std::get_if<DenseDelayLayer>(&net.stages().back().layer);
  if (!dense) throw ShapeError("synaptic_impact needs a dense output stage");
  int classes = data.classes;
  for (const auto& s : data.samples) classes = std::max(classes, s.label + 1);
  std::vector<Matrix> impact(static_cast<std::size_t>(classes),
                             Matrix::Zero(dense->outputs(), dense->inputs()));
  std::vector<double> frames(static_cast<std::size_t>(classes), 0.0);
  ForwardTape tape;
  for (const auto& sample : data.samples) {
    try {
      net.forward(sample.frames, &tape);
    } catch (const DegenerateLayerError&) {
      continue;
    }
    const Matrix& z = tape.stages.back().input;
    auto& acc = impact[static_cast<std::size_t>(sample.label)];
    for (Index f = 0; f < z.rows(); ++f) {
      for (Index i = 0; i < z.cols(); ++i) {
        if (is_silent(z(f, i))) continue;
        for (Index j = 0; j < dense->outputs(); ++j) {
          acc(j, i) += synaptic_activity(z(f, i), dense->signed_delays(i, j),
                                         dense->sigma(j), dense->kernel);
        }
      }
    }
    frames[static_cast<std::size_t>(sample.label)] += static_cast<double>(z.rows());
  }
  for (std::size_t c = 0; c < impact.size(); ++c) {
    if (frames[c] > 0) impact[c] /= frames[c];
  }
  return impact;
}

void write_impact_csv(std::ostream& os, const std::vector<Matrix>& impact) {
  os << "class,output,input,mean_activity\n";
  for (std::size_t c = 0; c < impact.size(); ++c) {
    for (Index j = 0; j < impact[c].rows(); ++j) {
      for (Index i = 0; i < impact[c].cols(); ++i) {
        os << c << ',' << j << ',' << i << ',' << impact[c](j, i) << '\n';
      }
    }
  }
}

ActivityCurve activity_curve(const KernelSpec& kernel, double z, double sigma,
                             double range, int points) {
  ActivityCurve c;
  c.signed_delay.resize(points);
  c.delay.resize(points);
  c.corrected.resize(points);
  c.uncorrected.resize(points);
  for (int k = 0; k < points; ++k) {
    const double ds =
        points > 1 ? -range + 2.0 * range * k / (points - 1) : 0.0;
    const double d = delay_from_signed(ds, sigma);
    c.signed_delay(k) = ds;
    c.delay(k) = d;
    c.corrected(k) = synaptic_activity(z, ds, sigma, kernel);
    c.uncorrected(k) = sign(ds) * kernel_value(kernel, z + d);
  }
  return c;
}

void write_activity_csv(std::ostream& os, const ActivityCurve& curve) {
  os << "signed_delay,delay,corrected,uncorrected\n";
  for (Index k = 0; k < curve.delay.size(); ++k) {
    os << curve.signed_delay(k) << ',' << curve.delay(k) << ','
       << curve.corrected(k) << ',' << curve.uncorrected(k) << '\n';
  }
}

}  // namespace denn
