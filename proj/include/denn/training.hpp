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

// Loss, optimizer and the training / evaluation loops.

#ifndef DENN_TRAINING_HPP_
#define DENN_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "denn/network.hpp"

namespace denn {

// pi_c = sum_s e^{-z_cs} / sum_s sum_j e^{-z_js} over the M x K output times.
// Throws DegeneratePosteriorError when every output is silent.
VectorXd temporal_softmin(const Matrix& z);

struct LossResult {
  double loss = 0;
  Matrix grad;  // dL/dz, same shape as z
  VectorXd posterior;
  bool clipped = false;  // pi_target fell below the 1e-30 floor
};

// -log pi_target and its gradient with respect to every output time.
LossResult cross_entropy(const Matrix& z, int target);

inline constexpr double kPosteriorFloor = 1e-30;

// Divides every tensor by max(1, ||g||_F).
void frobenius_normalize(std::span<const std::span<double>> tensors);
void frobenius_normalize(std::span<double> tensor);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moments are laid out like Network::parameters().
class Adam {
 public:
  Adam() = default;
  explicit Adam(const std::vector<ParamView>& params, AdamSettings settings = {});

  // Applies one step and clamps every sigma to kSigmaFloor.
  void step(std::vector<ParamView>& params, const std::vector<ParamView>& grads,
            double learning_rate);

  std::uint64_t steps() const { return step_; }
  void set_steps(std::uint64_t steps) { step_ = steps; }
  std::vector<VectorXd>& first_moments() { return m_; }
  std::vector<VectorXd>& second_moments() { return v_; }
  const std::vector<VectorXd>& first_moments() const { return m_; }
  const std::vector<VectorXd>& second_moments() const { return v_; }

 private:
  AdamSettings settings_;
  std::vector<VectorXd> m_;
  std::vector<VectorXd> v_;
  std::uint64_t step_ = 0;
};

enum class Scheduler { kNone, kCosineAnnealing };

// Learning rate for a (0-based) epoch. Cosine annealing spans all epochs and
// decays towards 0.
double scheduled_rate(Scheduler scheduler, double base, int epoch, int epochs);

struct Sample {
  Matrix frames;  // M x input size
  int label = 0;
};

struct Dataset {
  Shape3 shape;
  int classes = 0;
  std::vector<Sample> samples;
  std::size_t size() const { return samples.size(); }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 1;
  Scheduler scheduler = Scheduler::kNone;
  std::uint32_t seed = 0;
  int threads = 0;  // 0: DENN_NUM_THREADS or hardware concurrency
};

struct EvalResult {
  double loss = 0;      // mean over scored samples
  double accuracy = 0;  // over all samples; skipped ones count as wrong
  std::size_t correct = 0;
  std::size_t skipped = 0;
  std::size_t count = 0;
  std::uint64_t clipped = 0;
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0;
  EvalResult train;
  EvalResult test;
};

// Thread count from the argument, DENN_NUM_THREADS, or the hardware.
int resolve_threads(int requested);

// Predicted class of one sample, using at most `max_frames` frames (0: all).
int predict(const Network& net, const Matrix& frames, int max_frames = 0);

EvalResult evaluate(const Network& net, const Dataset& data, int threads = 0,
                    int max_frames = 0);

// Sum of per-sample gradients over `indices`, resolved into delay gradients.
struct BatchResult {
  NetworkGradients grads;
  double loss = 0;
  std::size_t correct = 0;
  std::size_t skipped = 0;
  std::size_t scored = 0;
  std::uint64_t clipped = 0;
};
BatchResult batch_gradients(const Network& net, const Dataset& data,
                            std::span<const std::size_t> indices, int threads);

// Full training state, so a run can be checkpointed and resumed.
struct TrainerState {
  Adam adam;
  std::mt19937 rng;
  int epoch = 0;  // next epoch to run
};

TrainerState make_trainer_state(Network& net, const TrainConfig& config);

// One epoch: shuffles, steps once per batch (normalize, Adam, refresh).
EvalResult train_epoch(Network& net, const Dataset& data,
                       const TrainConfig& config, TrainerState& state);

// Runs the remaining epochs. After each one `on_epoch` receives the record
// (test set evaluated when non-empty).
void train(Network& net, const Dataset& train_set, const Dataset& test_set,
           const TrainConfig& config, TrainerState& state,
           const std::function<void(const EpochRecord&)>& on_epoch);

void write_metrics_header(std::ostream& os);
void write_metrics(std::ostream& os, const EpochRecord& record);

}  // namespace denn

#endif  // DENN_TRAINING_HPP_
