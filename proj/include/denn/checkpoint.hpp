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

// Checkpoints: "DENN", u32 version, u32 tensor count, then per tensor
// u32 name length, name bytes, u32 rank, rank x u64 dims and the float64
// payload, all little-endian.
//
// Besides the parameters a checkpoint holds the run config (as character
// codes), its hash split into two 32-bit halves, the Adam moments and step,
// the epoch counter and the mt19937 state.

#ifndef DENN_CHECKPOINT_HPP_
#define DENN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "denn/config.hpp"
#include "denn/network.hpp"
#include "denn/training.hpp"

namespace denn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

std::vector<std::uint8_t> encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const RunConfig& config,
                     const TrainerState* state = nullptr);

struct LoadedCheckpoint {
  RunConfig config;
  std::uint64_t hash = 0;
  Network net;
  std::optional<TrainerState> state;
};

// With `expected`, a config hash mismatch raises ConfigError.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const RunConfig* expected = nullptr);

}  // namespace denn

#endif  // DENN_CHECKPOINT_HPP_
