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

// Synthetic data: event streams for property tests, a saccade-driven
// event-camera surrogate of N-MNIST built from MNIST digits, and a
// two-class task that only frame order separates.

#ifndef DENN_SYNTHETIC_HPP_
#define DENN_SYNTHETIC_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "denn/events.hpp"
#include "denn/training.hpp"

namespace denn {

// Events at uniformly random cells of a 2 x height x width sensor, with
// exponential inter-event gaps of mean `mean_gap` microseconds.
std::vector<Event> poisson_stream(Shape3 cells, double mean_gap,
                                  std::size_t count, std::mt19937& rng);

// Short streams with heavy cell reuse and repeated timestamps; stresses
// the accumulator's bookkeeping rather than modelling a sensor.
std::vector<Event> random_stream(Shape3 cells, std::size_t max_count,
                                 std::mt19937& rng);

struct SaccadeOptions {
  int sensor = 34;                // square sensor side
  double leg_ms = 100.0;          // one saccade
  double step_ms = 1.0;
  double contrast = 0.4;          // log-intensity threshold
  double contrast_spread = 0.03;  // per-pixel threshold mismatch
  double log_offset = 0.05;       // log(I + offset)
  double noise_hz = 0.5;          // background events per pixel
};

// Moves a 28 x 28 image (row-major intensities in [0, 1]) along three
// saccades tracing a triangle in front of a simulated DVS pixel array and
// returns the resulting ON/OFF events, time-sorted.
std::vector<Event> saccade_events(const Eigen::Ref<const VectorXd>& image,
                                  int image_side, std::uint32_t seed,
                                  const SaccadeOptions& options = {});

struct OrderTaskOptions {
  int features = 16;
  int frames_per_phase = 2;  // frames per prototype; a sample has twice this
  double noise = 0.35;
  int outputs = 3;           // output neurons; only labels 0 and 1 occur
};

// Class 0 shows noisy copies of prototype A then of prototype B; class 1
// is the exact reversal of a class-0 sample. Both classes therefore contain
// the very same frames, and any model that ignores frame order scores
// identically on each reversed pair.
Dataset frame_order_task(std::size_t pairs, std::uint32_t seed,
                         const OrderTaskOptions& options = {});

}  // namespace denn

#endif  // DENN_SYNTHETIC_HPP_
