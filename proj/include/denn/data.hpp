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

// Dataset assembly from the configured files.
//
// Event formats (nmnist, devt) expect the N-MNIST distribution layout: a
// directory with one subdirectory per integer label, one file per sample.
// Files are visited in name order within a label and round-robin across
// labels, so a limit keeps the classes balanced.

#ifndef DENN_DATA_HPP_
#define DENN_DATA_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "denn/config.hpp"
#include "denn/events.hpp"
#include "denn/training.hpp"

namespace denn {

enum class Split { kTrain, kTest };

struct LoadStats {
  std::size_t samples = 0;
  std::size_t skipped = 0;         // empty or degenerate samples
  std::uint64_t frames = 0;
  std::uint64_t dropped_frames = 0;
  double mean_span_us = 0;         // event formats only
  std::vector<std::string> warnings;
};

// (label, path) pairs in the order described above.
std::vector<std::pair<int, std::filesystem::path>> list_labeled_files(
    const std::filesystem::path& root, std::size_t limit);

// Event-based splits as frame sequences, for the frame cache.
FrameCache preprocess_split(const RunConfig& config, Split split,
                            LoadStats* stats = nullptr);

// Any format, ready for training.
Dataset load_split(const RunConfig& config, Split split,
                   LoadStats* stats = nullptr);

}  // namespace denn

#endif  // DENN_DATA_HPP_
