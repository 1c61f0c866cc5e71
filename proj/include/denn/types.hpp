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

#ifndef DENN_TYPES_HPP_
#define DENN_TYPES_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace denn {

// Frames are stored one per row so a frame's neurons are contiguous.
template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = RowMatrix<double>;
using VectorXd = Eigen::VectorXd;
using Index = Eigen::Index;

// Spike time of a neuron that did not fire. Every kernel maps it to 0.
template <typename Scalar = double>
inline constexpr Scalar kSilent = std::numeric_limits<Scalar>::infinity();

template <typename Scalar>
constexpr bool is_silent(Scalar x) {
  return x == kSilent<Scalar>;
}

// Raised when a layer cannot be standardized (fewer than two live neurons or
// no spread). Training treats it as a per-sample skip.
class DegenerateLayerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegeneratePosteriorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File format problems. `offset` is the byte position where decoding failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Channel-major feature map shape; a flat vector of n neurons is {1, 1, n}.
struct Shape3 {
  int channels = 1;
  int height = 1;
  int width = 1;

  Index size() const {
    return static_cast<Index>(channels) * height * width;
  }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

}  // namespace denn

#endif  // DENN_TYPES_HPP_
