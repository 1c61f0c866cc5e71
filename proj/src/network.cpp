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

#include "denn/network.hpp"

#include <charconv>
#include <random>
#include <sstream>

namespace denn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int parse_int(std::string_view text, std::string_view token) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("bad layer token '" + std::string(token) + "'");
  }
  return value;
}

// Splits "8c5s2p1" into its numeric fields keyed by the letter before them.
LayerSpec parse_layer(std::string_view token) {
  LayerSpec spec;
  if (token.empty()) throw ConfigError("empty layer token");
  if (token.front() == 'p') {
    spec.kind = LayerKind::kMinPool;
    spec.kernel = 2;
    spec.stride = 2;
    if (token != "p2s2" && token != "p2") {
      throw ConfigError("only 2x2/stride-2 min pooling is supported, got '" +
                        std::string(token) + "'");
    }
    return spec;
  }
  const auto c = token.find('c');
  if (c == std::string_view::npos) {
    spec.kind = LayerKind::kDense;
    spec.units = parse_int(token, token);
    if (spec.units <= 0) throw ConfigError("dense layer needs units > 0");
    return spec;
  }
  spec.kind = LayerKind::kConv;
  spec.units = parse_int(token.substr(0, c), token);
  std::string_view rest = token.substr(c + 1);
  const auto s = rest.find('s');
  if (s == std::string_view::npos) {
    throw ConfigError("conv token '" + std::string(token) + "' needs a stride");
  }
  spec.kernel = parse_int(rest.substr(0, s), token);
  rest = rest.substr(s + 1);
  const auto p = rest.find('p');
  if (p == std::string_view::npos) {
    spec.stride = parse_int(rest, token);
  } else {
    spec.stride = parse_int(rest.substr(0, p), token);
    spec.padding = parse_int(rest.substr(p + 1), token);
  }
  if (spec.units <= 0 || spec.kernel <= 0 || spec.stride <= 0) {
    throw ConfigError("bad conv token '" + std::string(token) + "'");
  }
  return spec;
}

// Backpropagates through per-frame standardization:
// dL/dt = (g - mean(g) - z * mean(g z)) / s over the n live entries.
void standardization_backward(const Matrix& z, const VectorXd& stdev,
                              Matrix& g) {
  for (Index f = 0; f < g.rows(); ++f) {
    const double n = static_cast<double>(g.cols());
    const double mean_g = g.row(f).sum() / n;
    const double mean_gz = g.row(f).dot(z.row(f)) / n;
    g.row(f) = ((g.row(f).array() - mean_g) - z.row(f).array() * mean_gz) /
               stdev(f);
  }
}

}  // namespace

NetworkSpec NetworkSpec::parse(Shape3 input, std::string_view layers) {
  NetworkSpec spec;
  spec.input = input;
  std::size_t start = 0;
  while (start <= layers.size()) {
    const auto dash = layers.find('-', start);
    const auto end = dash == std::string_view::npos ? layers.size() : dash;
    std::string_view token = layers.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    spec.layers.push_back(parse_layer(token));
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  return spec;
}

std::string NetworkSpec::layers_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i) os << '-';
    const auto& l = layers[i];
    switch (l.kind) {
      case LayerKind::kDense:
        os << l.units;
        break;
      case LayerKind::kConv:
        os << l.units << 'c' << l.kernel << 's' << l.stride;
        if (l.padding) os << 'p' << l.padding;
        break;
      case LayerKind::kMinPool:
        os << "p2s2";
        break;
    }
  }
  return os.str();
}

NetworkSpec architecture_preset(std::string_view name) {
  if (name == "mnist") return NetworkSpec::parse({1, 28, 28}, "100-10");
  if (name == "cifar10") {
    return NetworkSpec::parse(
        {3, 32, 32},
        "64c3s1p1-64c3s1p1-p2s2-128c3s1p1-128c3s1p1-p2s2-256c3s1p1-"
        "256c3s1p1-256c3s1p1-p2s2-1024-10");
  }
  if (name == "nmnist") {
    return NetworkSpec::parse({2, 34, 34},
                              "8c5s2-16c3s1-p2s2-32c3s1-32c3s1-p2s2-10");
  }
  if (name == "dvs-gesture") {
    return NetworkSpec::parse({2, 128, 128},
                              "8c7s3-16c5s2-p2s2-32c3s1-32c3s1-p2s2-11");
  }
  if (name == "gsc") {
    NetworkSpec spec = NetworkSpec::parse({2, 1, 30}, "256-256-256-35");
    spec.nu = 25;
    return spec;
  }
  throw ConfigError("unknown architecture preset '" + std::string(name) + "'");
}

Network::Network(NetworkSpec spec, std::uint32_t seed) : spec_(std::move(spec)) {
  if (spec_.layers.empty()) throw ConfigError("network has no layers");
  if (spec_.layers.back().kind == LayerKind::kMinPool) {
    throw ConfigError("the output layer must be dense or convolutional");
  }
  if (!(spec_.q > 0.0 && spec_.q <= 1.0)) {
    throw ConfigError("q must lie in (0, 1]");
  }
  if (spec_.nu < 0) throw ConfigError("nu must be non-negative");
  std::mt19937 rng(seed);
  Shape3 shape = spec_.input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const bool last = i + 1 == spec_.layers.size();
    Stage stage;
    switch (l.kind) {
      case LayerKind::kDense: {
        DenseDelayLayer dense(shape.size(), l.units, spec_.kernel);
        dense.initialize(rng);
        stage.layer = std::move(dense);
        shape = {1, 1, l.units};
        break;
      }
      case LayerKind::kConv: {
        ConvDelayLayer conv(shape, l.units, l.kernel, l.stride, l.padding,
                            spec_.kernel);
        conv.initialize(rng);
        shape = conv.output_shape();
        stage.layer = std::move(conv);
        break;
      }
      case LayerKind::kMinPool: {
        MinPoolLayer pool(shape, spec_.floor_pooling);
        shape = pool.output_shape();
        stage.layer = std::move(pool);
        break;
      }
    }
    if (l.kind != LayerKind::kMinPool && !last) {
      stage.inhibit = true;
      stage.memory = LongTermMemory(shape.size(), spec_.nu);
    }
    stages_.push_back(std::move(stage));
  }
}

Index Network::outputs() const {
  return std::visit(
      Overloaded{[](const DenseDelayLayer& l) { return l.outputs(); },
                 [](const ConvDelayLayer& l) { return l.output_shape().size(); },
                 [](const MinPoolLayer& l) { return l.output_shape().size(); }},
      stages_.back().layer);
}

Matrix Network::forward(const Matrix& frames, ForwardTape* tape) const {
  if (frames.cols() != spec_.input.size()) {
    throw ShapeError("network expects " + std::to_string(spec_.input.size()) +
                     " inputs per frame, got " + std::to_string(frames.cols()));
  }
  if (frames.rows() == 0) throw ShapeError("network_forward: no frames");
  Matrix z = spec_.inhibit_input ? inhibit_frames(frames, spec_.q) : frames;
  if (tape) {
    tape->input = z;
    tape->stages.assign(stages_.size(), StageTape{});
  }
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const Stage& stage = stages_[k];
    StageTape local;
    StageTape& st = tape ? tape->stages[k] : local;
    if (tape) st.input = z;
    if (const auto* pool = std::get_if<MinPoolLayer>(&stage.layer)) {
      z = pool->forward(z, tape ? &st.argmin : nullptr);
      if (tape) st.output = z;
      continue;
    }
    Matrix raw = std::visit(
        Overloaded{
            [&](const DenseDelayLayer& l) { return l.raw_times(z, &st.clipped); },
            [&](const ConvDelayLayer& l) { return l.raw_times(z, &st.clipped); },
            [&](const MinPoolLayer&) { return Matrix(); }},
        stage.layer);
    VectorXd stdev;
    Matrix standardized = standardize_frames(raw, &stdev);
    Matrix active =
        stage.inhibit ? inhibit_frames(standardized, spec_.q) : standardized;
    z = stage.memory.nu() > 0 ? stage.memory.forward(active) : active;
    if (tape) {
      st.raw = std::move(raw);
      st.stdev = std::move(stdev);
      st.standardized = std::move(standardized);
      st.active = std::move(active);
      st.output = z;
    }
  }
  return z;
}

void Network::backward(const ForwardTape& tape, const Matrix& g_output,
                       NetworkGradients& grads) const {
  if (tape.stages.size() != stages_.size() || grads.size() != stages_.size()) {
    throw ShapeError("network_backward: tape does not match network");
  }
  if (g_output.rows() != tape.output().rows() ||
      g_output.cols() != tape.output().cols()) {
    throw ShapeError("network_backward: output gradient has wrong shape");
  }
  Matrix g = g_output;
  for (std::size_t k = stages_.size(); k-- > 0;) {
    const Stage& stage = stages_[k];
    const StageTape& st = tape.stages[k];
    const bool want_input = k > 0;
    if (const auto* pool = std::get_if<MinPoolLayer>(&stage.layer)) {
      g = pool->backward(st.argmin, g, st.input.rows());
      continue;
    }
    if (stage.memory.nu() > 0) g = stage.memory.backward(st.active, g, grads[k]);
    if (stage.inhibit) {
      g = (st.active.array() == kSilent<double>).select(0.0, g);
    }
    standardization_backward(st.standardized, st.stdev, g);
    g = std::visit(
        Overloaded{[&](const DenseDelayLayer& l) {
                     return l.backward(st.input, g, grads[k], want_input);
                   },
                   [&](const ConvDelayLayer& l) {
                     return l.backward(st.input, g, grads[k], want_input);
                   },
                   [&](const MinPoolLayer&) { return Matrix(); }},
        stage.layer);
  }
}

NetworkGradients Network::zero_gradients() const {
  NetworkGradients grads(stages_.size());
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    std::visit(Overloaded{[&](const DenseDelayLayer& l) {
                            grads[k] = l.zero_gradients();
                          },
                          [&](const ConvDelayLayer& l) {
                            grads[k] = l.zero_gradients();
                          },
                          [](const MinPoolLayer&) {}},
               stages_[k].layer);
    const auto& memory = stages_[k].memory;
    if (memory.nu() > 0) {
      grads[k].alpha_raw = Matrix::Zero(memory.neurons(), memory.nu());
    }
  }
  return grads;
}

void Network::resolve(NetworkGradients& grads) const {
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    std::visit(Overloaded{[&](const DenseDelayLayer& l) { l.resolve(grads[k]); },
                          [&](const ConvDelayLayer& l) { l.resolve(grads[k]); },
                          [](const MinPoolLayer&) {}},
               stages_[k].layer);
  }
}

namespace {

template <typename Fn>
void for_each_tensor(std::size_t stages, Fn&& fn) {
  for (std::size_t k = 0; k < stages; ++k) fn(k);
}

std::span<double> as_span(Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> as_span(VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

std::vector<ParamView> Network::parameters() {
  std::vector<ParamView> views;
  for_each_tensor(stages_.size(), [&](std::size_t k) {
    const std::string prefix = "stage" + std::to_string(k) + ".";
    auto add = [&](Matrix& ds, VectorXd& sigma) {
      views.push_back({prefix + "signed_delays", ParamKind::kSignedDelay, k,
                       as_span(ds)});
      views.push_back({prefix + "sigma", ParamKind::kSigma, k, as_span(sigma)});
    };
    std::visit(Overloaded{[&](DenseDelayLayer& l) { add(l.signed_delays, l.sigma); },
                          [&](ConvDelayLayer& l) { add(l.signed_delays, l.sigma); },
                          [](MinPoolLayer&) {}},
               stages_[k].layer);
    if (stages_[k].memory.nu() > 0) {
      views.push_back({prefix + "alpha_raw", ParamKind::kAlpha, k,
                       as_span(stages_[k].memory.alpha_raw)});
    }
  });
  return views;
}

std::vector<ParamView> Network::gradient_views(const Network& net,
                                               NetworkGradients& grads) {
  std::vector<ParamView> views;
  for_each_tensor(net.stages_.size(), [&](std::size_t k) {
    const std::string prefix = "stage" + std::to_string(k) + ".";
    if (!std::holds_alternative<MinPoolLayer>(net.stages_[k].layer)) {
      views.push_back({prefix + "signed_delays", ParamKind::kSignedDelay, k,
                       as_span(grads[k].signed_delays)});
      views.push_back(
          {prefix + "sigma", ParamKind::kSigma, k, as_span(grads[k].sigma)});
    }
    if (net.stages_[k].memory.nu() > 0) {
      views.push_back({prefix + "alpha_raw", ParamKind::kAlpha, k,
                       as_span(grads[k].alpha_raw)});
    }
  });
  return views;
}

void Network::refresh() {
  for (auto& stage : stages_) {
    std::visit(Overloaded{[](DenseDelayLayer& l) { l.refresh(); },
                          [](ConvDelayLayer& l) { l.refresh(); },
                          [](MinPoolLayer&) {}},
               stage.layer);
  }
}

Index Network::parameter_count(bool with_sigma) const {
  Index count = 0;
  for (const auto& stage : stages_) {
    std::visit(Overloaded{[&](const DenseDelayLayer& l) {
                            count += l.signed_delays.size();
                            if (with_sigma) count += l.sigma.size();
                          },
                          [&](const ConvDelayLayer& l) {
                            count += l.signed_delays.size();
                            if (with_sigma) count += l.sigma.size();
                          },
                          [](const MinPoolLayer&) {}},
               stage.layer);
    count += stage.memory.alpha_raw.size();
  }
  return count;
}

Matrix network_forward(const Network& net, const Matrix& frames,
                       ForwardTape* tape) {
  return net.forward(frames, tape);
}

NetworkGradients network_backward(const Network& net, const ForwardTape& tape,
                                  const Matrix& g_output) {
  NetworkGradients grads = net.zero_gradients();
  net.backward(tape, g_output, grads);
  net.resolve(grads);
  return grads;
}

Matrix inhibit_frames(const Matrix& z, double q) {
  if (q >= 1.0) return z;
  Matrix out(z.rows(), z.cols());
  for (Index f = 0; f < z.rows(); ++f) {
    out.row(f) = temp_relu(z.row(f).transpose(), q).transpose();
  }
  return out;
}

Matrix standardize_frames(const Matrix& t, VectorXd* stdev) {
  Matrix out(t.rows(), t.cols());
  if (stdev) stdev->resize(t.rows());
  for (Index f = 0; f < t.rows(); ++f) {
    auto s = standardize(t.row(f).transpose());
    out.row(f) = s.values.transpose();
    if (stdev) (*stdev)(f) = s.stdev;
  }
  return out;
}

}  // namespace denn
