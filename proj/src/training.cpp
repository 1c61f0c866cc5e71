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

#include "denn/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <ostream>
#include <thread>

namespace denn {

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::size_t i = next++; i < n && !failed; i = next++) fn(i);
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Gradient accumulation happens in this many fixed contiguous chunks so the
// summation order does not depend on the thread count.
constexpr std::size_t kChunks = 16;

// Exponentials of -(z - shift) with the smallest live time as shift.
Matrix shifted_urgency(const Matrix& z, double* shift) {
  double m = kSilent<double>;
  for (Index i = 0; i < z.size(); ++i) m = std::min(m, z.data()[i]);
  if (is_silent(m)) {
    throw DegeneratePosteriorError("temporal_softmin: every output is silent");
  }
  if (shift) *shift = m;
  // std::exp per entry: Eigen's packet exp maps -inf to a denormal, not 0.
  return z.unaryExpr([m](double v) { return std::exp(m - v); });
}

}  // namespace

VectorXd temporal_softmin(const Matrix& z) {
  if (z.rows() == 0 || z.cols() == 0) {
    throw ShapeError("temporal_softmin: empty output");
  }
  const Matrix a = shifted_urgency(z, nullptr);
  const VectorXd per_class = a.colwise().sum().transpose();
  return per_class / per_class.sum();
}

LossResult cross_entropy(const Matrix& z, int target) {
  if (target < 0 || target >= z.cols()) {
    throw ShapeError("cross_entropy: target out of range");
  }
  LossResult out;
  const Matrix a = shifted_urgency(z, nullptr);
  const VectorXd per_class = a.colwise().sum().transpose();
  const double total = per_class.sum();
  out.posterior = per_class / total;
  const double pi = out.posterior(target);
  out.grad = Matrix::Zero(z.rows(), z.cols());
  if (pi < kPosteriorFloor) {
    // The floor is flat, so nothing flows back.
    out.clipped = true;
    out.loss = -std::log(kPosteriorFloor);
    return out;
  }
  out.loss = -std::log(pi);
  // dL/dz_ls = e^{-z_ls} ([l = y] / A_y - 1 / S); the shift cancels.
  out.grad = a * (-1.0 / total);
  out.grad.col(target) += a.col(target) / per_class(target);
  return out;
}

void frobenius_normalize(std::span<double> tensor) {
  Eigen::Map<VectorXd> g(tensor.data(), static_cast<Index>(tensor.size()));
  const double norm = g.norm();
  if (norm > 1.0) g /= norm;
}

void frobenius_normalize(std::span<const std::span<double>> tensors) {
  for (auto t : tensors) frobenius_normalize(t);
}

Adam::Adam(const std::vector<ParamView>& params, AdamSettings settings)
    : settings_(settings) {
  for (const auto& p : params) {
    m_.push_back(VectorXd::Zero(static_cast<Index>(p.values.size())));
    v_.push_back(VectorXd::Zero(static_cast<Index>(p.values.size())));
  }
}

void Adam::step(std::vector<ParamView>& params,
                const std::vector<ParamView>& grads, double learning_rate) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam: parameter list changed");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(settings_.beta1, t);
  const double c2 = 1.0 - std::pow(settings_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].values.size() != grads[k].values.size() ||
        static_cast<Index>(params[k].values.size()) != m_[k].size()) {
      throw ShapeError("adam: shape mismatch for " + params[k].name);
    }
    Eigen::Map<VectorXd> x(params[k].values.data(), m_[k].size());
    Eigen::Map<const VectorXd> g(grads[k].values.data(), m_[k].size());
    m_[k] = settings_.beta1 * m_[k] + (1.0 - settings_.beta1) * g;
    v_[k] = settings_.beta2 * v_[k] + (1.0 - settings_.beta2) * g.cwiseAbs2();
    x.array() -= learning_rate * (m_[k].array() / c1) /
                 ((v_[k].array() / c2).sqrt() + settings_.epsilon);
    if (params[k].kind == ParamKind::kSigma) {
      x = x.cwiseMax(kSigmaFloor);
    }
  }
}

double scheduled_rate(Scheduler scheduler, double base, int epoch, int epochs) {
  if (scheduler == Scheduler::kNone || epochs <= 0) return base;
  const double phase =
      std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs);
  return 0.5 * base * (1.0 + std::cos(phase));
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DENN_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

Matrix first_frames(const Matrix& frames, int max_frames) {
  if (max_frames < 0) throw ShapeError("max_frames must be non-negative");
  if (max_frames == 0 || max_frames >= frames.rows()) return frames;
  return frames.topRows(max_frames);
}

Index argmax(const VectorXd& v) {
  Index best = 0;
  v.maxCoeff(&best);
  return best;
}

}  // namespace

int predict(const Network& net, const Matrix& frames, int max_frames) {
  const Matrix z = net.forward(first_frames(frames, max_frames));
  return static_cast<int>(argmax(temporal_softmin(z)));
}

EvalResult evaluate(const Network& net, const Dataset& data, int threads,
                    int max_frames) {
  struct Outcome {
    double loss = 0;
    bool correct = false;
    bool skipped = false;
    bool clipped = false;
  };
  std::vector<Outcome> outcomes(data.size());
  parallel_for(data.size(), resolve_threads(threads), [&](std::size_t i) {
    const Sample& s = data.samples[i];
    try {
      const Matrix z = net.forward(first_frames(s.frames, max_frames));
      const LossResult r = cross_entropy(z, s.label);
      outcomes[i].loss = r.loss;
      outcomes[i].clipped = r.clipped;
      outcomes[i].correct = argmax(r.posterior) == s.label;
    } catch (const DegenerateLayerError&) {
      outcomes[i].skipped = true;
    } catch (const DegeneratePosteriorError&) {
      outcomes[i].skipped = true;
    }
  });
  EvalResult out;
  out.count = data.size();
  double loss = 0;
  for (const auto& o : outcomes) {
    if (o.skipped) {
      ++out.skipped;
      continue;
    }
    loss += o.loss;
    out.correct += o.correct;
    out.clipped += o.clipped;
  }
  const std::size_t scored = out.count - out.skipped;
  out.loss = scored ? loss / static_cast<double>(scored) : 0.0;
  out.accuracy = out.count ? static_cast<double>(out.correct) /
                                 static_cast<double>(out.count)
                           : 0.0;
  return out;
}

BatchResult batch_gradients(const Network& net, const Dataset& data,
                            std::span<const std::size_t> indices, int threads) {
  const std::size_t n = indices.size();
  const std::size_t chunks = std::min(n, kChunks);
  std::vector<BatchResult> partial(chunks);
  parallel_for(chunks, resolve_threads(threads), [&](std::size_t c) {
    BatchResult& part = partial[c];
    part.grads = net.zero_gradients();
    const std::size_t begin = c * n / chunks;
    const std::size_t end = (c + 1) * n / chunks;
    ForwardTape tape;
    for (std::size_t k = begin; k < end; ++k) {
      const Sample& s = data.samples[indices[k]];
      try {
        net.forward(s.frames, &tape);
        const LossResult r = cross_entropy(tape.output(), s.label);
        net.backward(tape, r.grad, part.grads);
        part.loss += r.loss;
        part.correct += argmax(r.posterior) == s.label;
        part.clipped += r.clipped;
        ++part.scored;
      } catch (const DegenerateLayerError&) {
        ++part.skipped;
      } catch (const DegeneratePosteriorError&) {
        ++part.skipped;
      }
    }
  });
  BatchResult out;
  out.grads = net.zero_gradients();
  for (const auto& part : partial) {
    for (std::size_t k = 0; k < out.grads.size(); ++k) {
      out.grads[k] += part.grads[k];
    }
    out.loss += part.loss;
    out.correct += part.correct;
    out.skipped += part.skipped;
    out.scored += part.scored;
    out.clipped += part.clipped;
  }
  net.resolve(out.grads);
  return out;
}

TrainerState make_trainer_state(Network& net, const TrainConfig& config) {
  TrainerState state;
  state.adam = Adam(net.parameters());
  state.rng.seed(config.seed);
  return state;
}

EvalResult train_epoch(Network& net, const Dataset& data,
                       const TrainConfig& config, TrainerState& state) {
  if (config.batch_size <= 0) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), state.rng);
  const double rate = scheduled_rate(config.scheduler, config.learning_rate,
                                     state.epoch, config.epochs);
  const int threads = resolve_threads(config.threads);
  EvalResult out;
  out.count = data.size();
  double loss = 0;
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (std::size_t begin = 0; begin < order.size(); begin += batch) {
    const std::size_t end = std::min(order.size(), begin + batch);
    BatchResult r = batch_gradients(
        net, data, std::span(order).subspan(begin, end - begin), threads);
    loss += r.loss;
    out.correct += r.correct;
    out.skipped += r.skipped;
    out.clipped += r.clipped;
    if (r.scored == 0) continue;
    auto params = net.parameters();
    auto grads = Network::gradient_views(net, r.grads);
    for (auto& g : grads) frobenius_normalize(g.values);
    state.adam.step(params, grads, rate);
    net.refresh();
  }
  const std::size_t scored = out.count - out.skipped;
  out.loss = scored ? loss / static_cast<double>(scored) : 0.0;
  out.accuracy = out.count ? static_cast<double>(out.correct) /
                                 static_cast<double>(out.count)
                           : 0.0;
  ++state.epoch;
  return out;
}

void train(Network& net, const Dataset& train_set, const Dataset& test_set,
           const TrainConfig& config, TrainerState& state,
           const std::function<void(const EpochRecord&)>& on_epoch) {
  while (state.epoch < config.epochs) {
    EpochRecord record;
    record.epoch = state.epoch;
    record.learning_rate = scheduled_rate(
        config.scheduler, config.learning_rate, state.epoch, config.epochs);
    record.train = train_epoch(net, train_set, config, state);
    if (test_set.size() > 0) {
      record.test = evaluate(net, test_set, config.threads);
    }
    if (on_epoch) on_epoch(record);
  }
}

void write_metrics_header(std::ostream& os) {
  os << "epoch,split,loss,accuracy,skipped_samples\n";
}

void write_metrics(std::ostream& os, const EpochRecord& record) {
  auto line = [&](const char* split, const EvalResult& r) {
    os << record.epoch << ',' << split << ',' << r.loss << ',' << r.accuracy
       << ',' << r.skipped << '\n';
  };
  line("train", record.train);
  if (record.test.count > 0) line("test", record.test);
  os.flush();
}

}  // namespace denn
