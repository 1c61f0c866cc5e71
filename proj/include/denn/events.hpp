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

// Event streams and the frames built from them.
//
// event2time keeps one timestamp list per (polarity, pixel) cell. Once more
// than 2rN cells hold at least one event a frame is emitted: active cells get
// t_i = (max L_i - min L_i) / #L_i, the others are silent, and every list is
// cleared. Frames are then standardized over their active cells.
//
// Cells are laid out like a 2 x H x W map: index = c * H * W + y * W + x with
// c = 1 for positive and c = 0 for negative polarity.

#ifndef DENN_EVENTS_HPP_
#define DENN_EVENTS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "denn/types.hpp"

namespace denn {

struct Event {
  std::uint64_t t = 0;  // microseconds
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;  // -1 or +1
  friend bool operator==(const Event&, const Event&) = default;
};

class EventOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw (unstandardized) frame; silent cells hold +inf.
struct RawFrame {
  VectorXd times;
  Index active = 0;
  std::uint64_t t_begin = 0;  // first and last event time in the frame
  std::uint64_t t_end = 0;
  bool partial = false;  // emitted by finalize() below the threshold
};

Index cell_index(const Shape3& cells, const Event& e);

class EventAccumulator {
 public:
  // `cells` must have 2 channels (one per polarity).
  EventAccumulator(Shape3 cells, double r);

  // Emits a frame when the active-cell count first exceeds 2rN.
  // Throws EventOrderError on a timestamp going backwards.
  std::optional<RawFrame> push(const Event& e);
  // Flushes the remainder if at least two cells are active.
  std::optional<RawFrame> finalize();

  double threshold() const { return threshold_; }
  Index active() const { return static_cast<Index>(touched_.size()); }

 private:
  RawFrame emit(bool partial);

  Shape3 cells_;
  double threshold_;
  std::vector<std::uint64_t> first_;
  std::vector<std::uint64_t> last_;
  std::vector<std::uint32_t> count_;
  std::vector<Index> touched_;
  std::uint64_t frame_begin_ = 0;
  std::uint64_t previous_ = 0;
  bool seen_ = false;
};

// Standardized frames of one sample, one per row.
struct FrameSequence {
  Matrix frames;
  std::vector<std::uint64_t> t_begin;
  std::vector<std::uint64_t> t_end;
  std::vector<bool> partial;
  std::uint64_t dropped = 0;  // frames whose active cells had no spread

  Index size() const { return frames.rows(); }
};

// Runs the accumulator over a whole stream and standardizes its frames.
FrameSequence event2time(std::span<const Event> events, Shape3 cells, double r);

// Standardizes raw frames, dropping (and counting) degenerate ones.
FrameSequence standardize_raw_frames(const std::vector<RawFrame>& raw,
                                     Index cells);

// Static image to a single frame: z = standardize(-intensity), so bright
// pixels fire first. With silence_background, zero-intensity pixels are
// silent and the statistics use the lit pixels only, unless the lit pixels
// all share one intensity (binarized digits), where the background is kept.
Matrix encode_static_image(const Eigen::Ref<const VectorXd>& pixels,
                           bool silence_background = false);

// IDX files. Images come back as one row per image scaled to [0, 1].
struct IdxImages {
  Shape3 shape;
  Matrix pixels;
};
IdxImages read_idx_images(const std::filesystem::path& path,
                          std::size_t limit = 0);
std::vector<int> read_idx_labels(const std::filesystem::path& path,
                                 std::size_t limit = 0);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<int>& labels);

// N-MNIST records: x, y, then polarity in bit 7 and a 23-bit timestamp.
Event decode_nmnist(std::span<const std::uint8_t, 5> record);
void encode_nmnist(const Event& e, std::span<std::uint8_t, 5> record);
std::vector<Event> read_nmnist(const std::filesystem::path& path);
void write_nmnist(const std::filesystem::path& path,
                  std::span<const Event> events);
std::vector<Event> parse_nmnist(std::span<const std::uint8_t> bytes);

// "DEVT" v1: magic, u32 version, then 9-byte records
// (u32 t, u16 x, u16 y, i8 p), all little-endian.
inline constexpr std::uint32_t kDevtVersion = 1;
inline constexpr std::size_t kDevtHeader = 8;
inline constexpr std::size_t kDevtRecord = 9;
std::vector<Event> read_canonical_events(const std::filesystem::path& path);
void write_canonical_events(const std::filesystem::path& path,
                            std::span<const Event> events);
std::vector<Event> parse_canonical_events(std::span<const std::uint8_t> bytes);

// Frame cache "DFRM" v1.
struct LabeledSequence {
  int label = 0;
  FrameSequence sequence;
};
struct FrameCache {
  Shape3 shape;
  std::vector<LabeledSequence> samples;
};
inline constexpr std::uint32_t kDfrmVersion = 1;
void write_frame_cache(const std::filesystem::path& path,
                       const FrameCache& cache);
FrameCache read_frame_cache(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace denn

#endif  // DENN_EVENTS_HPP_
