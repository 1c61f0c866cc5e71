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

// denn-synth: writes synthetic datasets in the formats denn reads.
//
//   nmnist   MNIST digits seen through a simulated saccading event camera,
//            in the N-MNIST directory layout and 5-byte record format
//   poisson  a Poisson event stream as a DEVT file
//   order    the frame-order task as a DFRM frame cache

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "denn/synthetic.hpp"

namespace fs = std::filesystem;
using namespace denn;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic datasets for denn"};
  app.require_subcommand(1);

  std::string images, labels, out;
  std::size_t limit = 0;
  std::uint32_t seed = 1;
  auto* nm = app.add_subcommand("nmnist", "saccade event-camera surrogate of N-MNIST");
  nm->add_option("--images", images)->required();
  nm->add_option("--labels", labels)->required();
  nm->add_option("--out", out, "root directory; one folder per label")->required();
  nm->add_option("--limit", limit, "first N images only");
  nm->add_option("--seed", seed);

  int height = 34, width = 34;
  std::size_t count = 10000;
  double gap = 10.0;
  std::string pfile;
  auto* po = app.add_subcommand("poisson", "Poisson event stream (DEVT)");
  po->add_option("--out", pfile)->required();
  po->add_option("--height", height);
  po->add_option("--width", width);
  po->add_option("--count", count);
  po->add_option("--gap", gap, "mean inter-event gap in microseconds");
  po->add_option("--seed", seed);

  std::size_t pairs = 500;
  std::string ofile;
  OrderTaskOptions order;
  auto* ord = app.add_subcommand("order", "two-class frame-order task (DFRM)");
  ord->add_option("--out", ofile)->required();
  ord->add_option("--pairs", pairs, "reversed sample pairs");
  ord->add_option("--features", order.features);
  ord->add_option("--frames-per-phase", order.frames_per_phase);
  ord->add_option("--noise", order.noise);
  ord->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*nm) {
      const IdxImages im = read_idx_images(images, limit);
      const auto y = read_idx_labels(labels, limit);
      if (im.shape.channels != 1 || im.shape.height != im.shape.width) {
        throw ShapeError("expected square greyscale images");
      }
      std::uint64_t events = 0;
      for (Index i = 0; i < im.pixels.rows(); ++i) {
        const auto e = saccade_events(im.pixels.row(i).transpose(), im.shape.height,
                                      seed + static_cast<std::uint32_t>(i));
        events += e.size();
        char name[32];
        std::snprintf(name, sizeof name, "%05lld.bin", static_cast<long long>(i));
        write_nmnist(fs::path(out) / std::to_string(y[static_cast<std::size_t>(i)]) / name, e);
      }
      std::printf("wrote %lld samples, %.0f events/sample, to %s\n",
                  static_cast<long long>(im.pixels.rows()),
                  im.pixels.rows() ? static_cast<double>(events) / im.pixels.rows() : 0.0,
                  out.c_str());
    } else if (*po) {
      std::mt19937 rng(seed);
      const auto e = poisson_stream({2, height, width}, gap, count, rng);
      write_canonical_events(pfile, e);
      std::printf("wrote %zu events to %s\n", e.size(), pfile.c_str());
    } else if (*ord) {
      const Dataset data = frame_order_task(pairs, seed, order);
      FrameCache cache;
      cache.shape = data.shape;
      for (const auto& s : data.samples) {
        LabeledSequence ls;
        ls.label = s.label;
        ls.sequence.frames = s.frames;
        const auto m = static_cast<std::size_t>(s.frames.rows());
        ls.sequence.t_begin.assign(m, 0);
        ls.sequence.t_end.assign(m, 0);
        ls.sequence.partial.assign(m, false);
        cache.samples.push_back(std::move(ls));
      }
      write_frame_cache(ofile, cache);
      std::printf("wrote %zu samples to %s\n", cache.samples.size(), ofile.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
