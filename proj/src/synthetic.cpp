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

#include "denn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "denn/temporal.hpp"

namespace denn {

namespace {

Event random_cell(Shape3 cells, std::mt19937& rng) {
  Event e;
  e.x = static_cast<std::uint16_t>(
      std::uniform_int_distribution<int>(0, cells.width - 1)(rng));
  e.y = static_cast<std::uint16_t>(
      std::uniform_int_distribution<int>(0, cells.height - 1)(rng));
  e.p = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  return e;
}

}  // namespace

std::vector<Event> poisson_stream(Shape3 cells, double mean_gap,
                                  std::size_t count, std::mt19937& rng) {
  std::exponential_distribution<double> gap(1.0 / mean_gap);
  std::vector<Event> out;
  out.reserve(count);
  double t = 0;
  for (std::size_t k = 0; k < count; ++k) {
    t += gap(rng);
    Event e = random_cell(cells, rng);
    e.t = static_cast<std::uint64_t>(t);
    out.push_back(e);
  }
  return out;
}

std::vector<Event> random_stream(Shape3 cells, std::size_t max_count,
                                 std::mt19937& rng) {
  const auto count = std::uniform_int_distribution<std::size_t>(0, max_count)(rng);
  // A small pool of favourite cells makes long lists likely.
  std::vector<Event> pool;
  const int favourites = std::uniform_int_distribution<int>(1, 6)(rng);
  for (int k = 0; k < favourites; ++k) pool.push_back(random_cell(cells, rng));
  std::uniform_int_distribution<int> step(0, 3);
  std::vector<Event> out;
  std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, 1000)(rng);
  for (std::size_t k = 0; k < count; ++k) {
    t += static_cast<std::uint64_t>(step(rng));
    Event e = std::bernoulli_distribution(0.4)(rng)
                  ? pool[std::uniform_int_distribution<std::size_t>(
                        0, pool.size() - 1)(rng)]
                  : random_cell(cells, rng);
    e.t = t;
    out.push_back(e);
  }
  return out;
}

namespace {

double bilinear(const Eigen::Ref<const VectorXd>& image, int side, double u,
                double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const int x0 = static_cast<int>(fu), y0 = static_cast<int>(fv);
  const double ax = u - fu, ay = v - fv;
  auto at = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= side || y >= side) return 0.0;
    return image(static_cast<Index>(y) * side + x);
  };
  return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
         ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
}

}  // namespace

std::vector<Event> saccade_events(const Eigen::Ref<const VectorXd>& image,
                                  int image_side, std::uint32_t seed,
                                  const SaccadeOptions& options) {
  if (image.size() != static_cast<Index>(image_side) * image_side) {
    throw ShapeError("saccade_events: image is not square");
  }
  const int n = options.sensor;
  if (n < image_side) throw ShapeError("saccade_events: sensor too small");
  std::mt19937 rng(seed);
  const double margin = 0.5 * (n - image_side);
  // Triangle of offsets around the centred position, in pixels.
  const std::array<std::array<double, 2>, 4> corners = {{
      {-2.0, -2.0}, {2.0, 0.0}, {-2.0, 2.0}, {-2.0, -2.0}}};
  auto offset = [&](double t_ms) {
    const double legs = t_ms / options.leg_ms;
    const int leg = std::min(2, static_cast<int>(legs));
    const double a = legs - leg;
    const auto& p = corners[static_cast<std::size_t>(leg)];
    const auto& q = corners[static_cast<std::size_t>(leg) + 1];
    return std::array<double, 2>{margin + p[0] + a * (q[0] - p[0]),
                                 margin + p[1] + a * (q[1] - p[1])};
  };
  const auto pixels = static_cast<std::size_t>(n) * n;
  auto sense = [&](double t_ms, std::vector<double>& log_i) {
    const auto o = offset(t_ms);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double v = bilinear(image, image_side, x - o[0], y - o[1]);
        log_i[static_cast<std::size_t>(y) * n + x] =
            std::log(std::clamp(v, 0.0, 1.0) + options.log_offset);
      }
    }
  };
  std::normal_distribution<double> mismatch(0.0, options.contrast_spread);
  std::vector<double> threshold(pixels);
  for (auto& th : threshold) {
    th = std::max(0.5 * options.contrast, options.contrast + mismatch(rng));
  }
  std::vector<double> previous(pixels), current(pixels);
  sense(0.0, previous);
  std::vector<double> reference = previous;

  std::vector<Event> out;
  const double total_ms = 3.0 * options.leg_ms;
  const int steps = static_cast<int>(std::lround(total_ms / options.step_ms));
  for (int k = 1; k <= steps; ++k) {
    const double t0 = (k - 1) * options.step_ms;
    sense(k * options.step_ms, current);
    for (std::size_t i = 0; i < pixels; ++i) {
      const double l0 = previous[i], l1 = current[i];
      const double th = threshold[i];
      while (std::abs(l1 - reference[i]) >= th) {
        const int p = l1 > reference[i] ? 1 : -1;
        const double level = reference[i] + p * th;
        // Crossing time by linear interpolation inside the step.
        double a = l1 != l0 ? (level - l0) / (l1 - l0) : 1.0;
        a = std::clamp(a, 0.0, 1.0);
        Event e;
        e.t = static_cast<std::uint64_t>(
            std::llround(1000.0 * (t0 + a * options.step_ms)));
        e.x = static_cast<std::uint16_t>(i % static_cast<std::size_t>(n));
        e.y = static_cast<std::uint16_t>(i / static_cast<std::size_t>(n));
        e.p = static_cast<std::int8_t>(p);
        out.push_back(e);
        reference[i] = level;
      }
    }
    std::swap(previous, current);
  }
  // Background activity.
  const double expected = options.noise_hz * static_cast<double>(pixels) *
                          total_ms / 1000.0;
  const int noise = std::poisson_distribution<int>(expected)(rng);
  std::uniform_real_distribution<double> when(0.0, 1000.0 * total_ms);
  for (int k = 0; k < noise; ++k) {
    Event e = random_cell({2, n, n}, rng);
    e.t = static_cast<std::uint64_t>(when(rng));
    out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return out;
}

Dataset frame_order_task(std::size_t pairs, std::uint32_t seed,
                         const OrderTaskOptions& options) {
  if (options.outputs < 3) {
    throw ConfigError("frame_order_task needs at least 3 output neurons");
  }
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = options.features;
  VectorXd a(n), b(n);
  for (Index i = 0; i < n; ++i) a(i) = normal(rng);
  for (Index i = 0; i < n; ++i) b(i) = normal(rng);

  Dataset data;
  data.shape = {1, 1, options.features};
  data.classes = 2;
  const Index m = 2 * options.frames_per_phase;
  for (std::size_t k = 0; k < pairs; ++k) {
    Matrix frames(m, n);
    for (Index f = 0; f < m; ++f) {
      const VectorXd& proto = f < options.frames_per_phase ? a : b;
      VectorXd t(n);
      for (Index i = 0; i < n; ++i) t(i) = proto(i) + options.noise * normal(rng);
      frames.row(f) = standardize(t).values.transpose();
    }
    data.samples.push_back({frames, 0});
    data.samples.push_back({frames.colwise().reverse(), 1});
  }
  return data;
}

}  // namespace denn
