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

// Run configuration: JSON with a strict schema, optionally starting from a
// dataset preset whose values explicit keys override.
//
//   {
//     "preset": "mnist",
//     "architecture": {"input": [1, 28, 28], "layers": "100-10"},
//     "kernel": "exponential",
//     "regime": {"q": 1.0},
//     "training": {"learning_rate": 0.001, "batch_size": 4096, "epochs": 50,
//                  "scheduler": "none", "seed": 22756400, "threads": 0},
//     "preprocessing": {"r": 0.05, "delta": 4, "nu": 0,
//                       "silence_background": true},
//     "data": {"format": "idx", "train": "...", "train_labels": "...",
//              "test": "...", "test_labels": "...",
//              "train_limit": 0, "test_limit": 0},
//     "output_dir": "runs/mnist"
//   }

#ifndef DENN_CONFIG_HPP_
#define DENN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "denn/network.hpp"
#include "denn/training.hpp"

namespace denn {

struct PreprocessConfig {
  double r = 0.05;
  int delta = 0;  // carried, not interpreted
  bool silence_background = false;
  friend bool operator==(const PreprocessConfig&,
                         const PreprocessConfig&) = default;
};

enum class DataFormat { kNone, kIdx, kNmnist, kCanonical, kFrames };

std::string to_string(DataFormat format);
DataFormat parse_data_format(std::string_view name);

struct DataConfig {
  DataFormat format = DataFormat::kNone;
  std::string train;
  std::string train_labels;
  std::string test;
  std::string test_labels;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
};

struct RunConfig {
  std::string preset;
  NetworkSpec network;
  TrainConfig training;
  PreprocessConfig preprocessing;
  DataConfig data;
  std::string output_dir = "runs";
};

// Published training settings of a dataset: "mnist", "cifar10", "nmnist",
// "dvs-gesture", "gsc".
RunConfig preset_config(std::string_view name);

// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

// Validates cross-field constraints; called by parse_config.
void validate(const RunConfig& config);

// FNV-1a over everything that changes what a checkpoint computes:
// architecture, kernel, regime, memory length and input handling.
std::uint64_t config_hash(const RunConfig& config);

std::string to_string(Scheduler scheduler);
Scheduler parse_scheduler(std::string_view name);
KernelSpec parse_kernel(std::string_view name);

}  // namespace denn

#endif  // DENN_CONFIG_HPP_
