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

#include "denn/events.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "denn/temporal.hpp"
#include "io_util.hpp"

namespace denn {

Index cell_index(const Shape3& cells, const Event& e) {
  if (e.x >= cells.width || e.y >= cells.height) {
    throw ShapeError("event (" + std::to_string(e.x) + ", " +
                     std::to_string(e.y) + ") outside a " + to_string(cells) +
                     " sensor");
  }
  const Index plane = static_cast<Index>(cells.height) * cells.width;
  const Index channel = e.p > 0 ? 1 : 0;
  return channel * plane + static_cast<Index>(e.y) * cells.width + e.x;
}

EventAccumulator::EventAccumulator(Shape3 cells, double r) : cells_(cells) {
  if (cells.channels != 2) {
    throw ShapeError("event2time needs two polarity channels");
  }
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("r must lie in (0, 1)");
  const double pixels = static_cast<double>(cells.height) * cells.width;
  threshold_ = 2.0 * r * pixels;
  const auto n = static_cast<std::size_t>(cells.size());
  first_.assign(n, 0);
  last_.assign(n, 0);
  count_.assign(n, 0);
}

std::optional<RawFrame> EventAccumulator::push(const Event& e) {
  if (seen_ && e.t < previous_) {
    throw EventOrderError("event timestamps must be non-decreasing (" +
                          std::to_string(e.t) + " after " +
                          std::to_string(previous_) + ")");
  }
  const auto cell = static_cast<std::size_t>(cell_index(cells_, e));
  if (touched_.empty()) frame_begin_ = e.t;
  seen_ = true;
  previous_ = e.t;
  if (count_[cell] == 0) {
    touched_.push_back(static_cast<Index>(cell));
    first_[cell] = e.t;
  }
  last_[cell] = e.t;
  ++count_[cell];
  if (static_cast<double>(touched_.size()) > threshold_) return emit(false);
  return std::nullopt;
}

std::optional<RawFrame> EventAccumulator::finalize() {
  if (touched_.size() < 2) {
    for (Index c : touched_) count_[static_cast<std::size_t>(c)] = 0;
    touched_.clear();
    return std::nullopt;
  }
  return emit(true);
}

RawFrame EventAccumulator::emit(bool partial) {
  RawFrame frame;
  frame.times = VectorXd::Constant(cells_.size(), kSilent<double>);
  frame.active = static_cast<Index>(touched_.size());
  frame.t_begin = frame_begin_;
  frame.t_end = previous_;
  frame.partial = partial;
  for (Index c : touched_) {
    const auto i = static_cast<std::size_t>(c);
    frame.times(c) = static_cast<double>(last_[i] - first_[i]) /
                     static_cast<double>(count_[i]);
    count_[i] = 0;
  }
  touched_.clear();
  return frame;
}

FrameSequence standardize_raw_frames(const std::vector<RawFrame>& raw,
                                     Index cells) {
  FrameSequence seq;
  std::vector<VectorXd> kept;
  for (const auto& f : raw) {
    try {
      kept.push_back(standardize(f.times).values);
    } catch (const DegenerateLayerError&) {
      ++seq.dropped;
      continue;
    }
    seq.t_begin.push_back(f.t_begin);
    seq.t_end.push_back(f.t_end);
    seq.partial.push_back(f.partial);
  }
  seq.frames.resize(static_cast<Index>(kept.size()), cells);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    seq.frames.row(static_cast<Index>(i)) = kept[i].transpose();
  }
  return seq;
}

FrameSequence event2time(std::span<const Event> events, Shape3 cells,
                         double r) {
  EventAccumulator acc(cells, r);
  std::vector<RawFrame> raw;
  for (const auto& e : events) {
    if (auto f = acc.push(e)) raw.push_back(std::move(*f));
  }
  if (auto f = acc.finalize()) raw.push_back(std::move(*f));
  return standardize_raw_frames(raw, cells.size());
}

Matrix encode_static_image(const Eigen::Ref<const VectorXd>& pixels,
                           bool silence_background) {
  VectorXd t = -pixels;
  if (silence_background) {
    double lo = kSilent<double>, hi = -kSilent<double>;
    for (Index i = 0; i < t.size(); ++i) {
      if (pixels(i) <= 0.0) continue;
      lo = std::min(lo, pixels(i));
      hi = std::max(hi, pixels(i));
    }
    if (hi > lo) {
      for (Index i = 0; i < t.size(); ++i) {
        if (pixels(i) <= 0.0) t(i) = kSilent<double>;
      }
    }
  }
  return standardize(t).values.transpose();
}

// ---------------------------------------------------------------------------
// IDX

namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxColourImages = 0x00000804;
constexpr std::uint32_t kIdxLabels = 0x00000801;

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path,
                          std::size_t limit) {
  const auto bytes = read_file(path);
  ByteReader in(bytes);
  // Unsigned-byte data with three (N, H, W) or four (N, C, H, W) dimensions.
  const std::uint32_t magic = in.u32be();
  if (magic != kIdxImages && magic != kIdxColourImages) {
    throw ParseError(path.string() + ": not an IDX image file", 0);
  }
  IdxImages out;
  std::size_t count = in.u32be();
  if (magic == kIdxColourImages) {
    out.shape.channels = static_cast<int>(in.u32be());
  }
  out.shape.height = static_cast<int>(in.u32be());
  out.shape.width = static_cast<int>(in.u32be());
  const std::size_t n = static_cast<std::size_t>(out.shape.size());
  if (in.remaining() < count * n) {
    throw ParseError(path.string() + ": truncated image data",
                     in.offset() + in.remaining());
  }
  if (limit > 0) count = std::min(count, limit);
  out.pixels.resize(static_cast<Index>(count), static_cast<Index>(n));
  const std::uint8_t* p = in.take(count * n);
  for (std::size_t i = 0; i < count * n; ++i) {
    out.pixels.data()[i] = static_cast<double>(p[i]) / 255.0;
  }
  return out;
}

std::vector<int> read_idx_labels(const std::filesystem::path& path,
                                 std::size_t limit) {
  const auto bytes = read_file(path);
  ByteReader in(bytes);
  if (in.u32be() != kIdxLabels) {
    throw ParseError(path.string() + ": not an IDX label file", 0);
  }
  std::size_t count = in.u32be();
  if (in.remaining() < count) {
    throw ParseError(path.string() + ": truncated label data",
                     in.offset() + in.remaining());
  }
  if (limit > 0) count = std::min(count, limit);
  const std::uint8_t* p = in.take(count);
  return std::vector<int>(p, p + count);
}

void write_idx_images(const std::filesystem::path& path,
                      const IdxImages& images) {
  ByteWriter out;
  const bool colour = images.shape.channels != 1;
  out.u32be(colour ? kIdxColourImages : kIdxImages);
  out.u32be(static_cast<std::uint32_t>(images.pixels.rows()));
  if (colour) out.u32be(static_cast<std::uint32_t>(images.shape.channels));
  out.u32be(static_cast<std::uint32_t>(images.shape.height));
  out.u32be(static_cast<std::uint32_t>(images.shape.width));
  for (Index i = 0; i < images.pixels.size(); ++i) {
    const double v = std::clamp(images.pixels.data()[i], 0.0, 1.0);
    out.u8(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  out.save(path);
}

void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<int>& labels) {
  ByteWriter out;
  out.u32be(kIdxLabels);
  out.u32be(static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.u8(static_cast<std::uint8_t>(l));
  out.save(path);
}

// ---------------------------------------------------------------------------
// N-MNIST

Event decode_nmnist(std::span<const std::uint8_t, 5> r) {
  Event e;
  e.x = r[0];
  e.y = r[1];
  e.p = (r[2] & 0x80) ? 1 : -1;
  e.t = (static_cast<std::uint64_t>(r[2] & 0x7F) << 16) |
        (static_cast<std::uint64_t>(r[3]) << 8) | r[4];
  return e;
}

void encode_nmnist(const Event& e, std::span<std::uint8_t, 5> r) {
  if (e.x > 0xFF || e.y > 0xFF || e.t >= (1u << 23)) {
    throw ShapeError("event does not fit an N-MNIST record");
  }
  r[0] = static_cast<std::uint8_t>(e.x);
  r[1] = static_cast<std::uint8_t>(e.y);
  r[2] = static_cast<std::uint8_t>(((e.p > 0) ? 0x80 : 0) | (e.t >> 16));
  r[3] = static_cast<std::uint8_t>((e.t >> 8) & 0xFF);
  r[4] = static_cast<std::uint8_t>(e.t & 0xFF);
}

std::vector<Event> parse_nmnist(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 5 != 0) {
    throw ParseError("N-MNIST stream length " + std::to_string(bytes.size()) +
                         " is not a multiple of 5",
                     bytes.size() - bytes.size() % 5);
  }
  std::vector<Event> events;
  events.reserve(bytes.size() / 5);
  for (std::size_t i = 0; i < bytes.size(); i += 5) {
    events.push_back(decode_nmnist(bytes.subspan(i).first<5>()));
  }
  return events;
}

std::vector<Event> read_nmnist(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_nmnist(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

void write_nmnist(const std::filesystem::path& path,
                  std::span<const Event> events) {
  std::vector<std::uint8_t> bytes(events.size() * 5);
  for (std::size_t i = 0; i < events.size(); ++i) {
    encode_nmnist(events[i], std::span(bytes).subspan(i * 5).first<5>());
  }
  ByteWriter out;
  out.bytes(bytes);
  out.save(path);
}

// ---------------------------------------------------------------------------
// DEVT

std::vector<Event> parse_canonical_events(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (bytes.size() < kDevtHeader || std::memcmp(bytes.data(), "DEVT", 4) != 0) {
    throw ParseError("missing DEVT magic", 0);
  }
  in.take(4);
  const std::uint32_t version = in.u32le();
  if (version != kDevtVersion) {
    throw ParseError("unsupported DEVT version " + std::to_string(version), 4);
  }
  if (in.remaining() % kDevtRecord != 0) {
    throw ParseError("DEVT payload is not a whole number of records",
                     kDevtHeader + in.remaining() / kDevtRecord * kDevtRecord);
  }
  std::vector<Event> events;
  events.reserve(in.remaining() / kDevtRecord);
  while (in.remaining() > 0) {
    Event e;
    e.t = in.u32le();
    e.x = in.u16le();
    e.y = in.u16le();
    const auto p = static_cast<std::int8_t>(in.u8());
    if (p != 1 && p != -1) {
      throw ParseError("DEVT polarity must be +1 or -1", in.offset() - 1);
    }
    e.p = p;
    events.push_back(e);
  }
  return events;
}

std::vector<Event> read_canonical_events(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_canonical_events(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

void write_canonical_events(const std::filesystem::path& path,
                            std::span<const Event> events) {
  ByteWriter out;
  out.bytes(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>("DEVT"), 4));
  out.u32le(kDevtVersion);
  for (const auto& e : events) {
    if (e.t > 0xFFFFFFFFull) throw ShapeError("DEVT timestamps are 32-bit");
    out.u32le(static_cast<std::uint32_t>(e.t));
    out.u16le(e.x);
    out.u16le(e.y);
    out.u8(static_cast<std::uint8_t>(e.p));
  }
  out.save(path);
}

// ---------------------------------------------------------------------------
// DFRM
//
// header: "DFRM", u32 version, u32 C, H, W, u32 samples
// sample: i32 label, u32 frames
// frame:  u32 n, u8 flags (bit 0 = partial), u64 t_begin, u64 t_end,
//         n float32 values (silent stored as 0), ceil(n/8) bytes silent bitset

void write_frame_cache(const std::filesystem::path& path,
                       const FrameCache& cache) {
  ByteWriter out;
  out.bytes(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>("DFRM"), 4));
  out.u32le(kDfrmVersion);
  out.u32le(static_cast<std::uint32_t>(cache.shape.channels));
  out.u32le(static_cast<std::uint32_t>(cache.shape.height));
  out.u32le(static_cast<std::uint32_t>(cache.shape.width));
  out.u32le(static_cast<std::uint32_t>(cache.samples.size()));
  for (const auto& s : cache.samples) {
    const auto& seq = s.sequence;
    out.u32le(static_cast<std::uint32_t>(s.label));
    out.u32le(static_cast<std::uint32_t>(seq.size()));
    for (Index f = 0; f < seq.size(); ++f) {
      const auto n = static_cast<std::size_t>(seq.frames.cols());
      out.u32le(static_cast<std::uint32_t>(n));
      out.u8(seq.partial[static_cast<std::size_t>(f)] ? 1 : 0);
      out.u64le(seq.t_begin[static_cast<std::size_t>(f)]);
      out.u64le(seq.t_end[static_cast<std::size_t>(f)]);
      std::vector<std::uint8_t> mask((n + 7) / 8, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = seq.frames(f, static_cast<Index>(i));
        if (is_silent(v)) {
          mask[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
          out.f32le(0.0f);
        } else {
          out.f32le(static_cast<float>(v));
        }
      }
      out.bytes(mask);
    }
  }
  out.save(path);
}

FrameCache read_frame_cache(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "DFRM", 4) != 0) {
    throw ParseError(path.string() + ": missing DFRM magic", 0);
  }
  in.take(4);
  const std::uint32_t version = in.u32le();
  if (version != kDfrmVersion) {
    throw ParseError(path.string() + ": unsupported DFRM version", 4);
  }
  FrameCache cache;
  cache.shape.channels = static_cast<int>(in.u32le());
  cache.shape.height = static_cast<int>(in.u32le());
  cache.shape.width = static_cast<int>(in.u32le());
  const std::uint32_t samples = in.u32le();
  const Index cells = cache.shape.size();
  cache.samples.reserve(samples);
  for (std::uint32_t s = 0; s < samples; ++s) {
    LabeledSequence item;
    item.label = static_cast<std::int32_t>(in.u32le());
    const std::uint32_t frames = in.u32le();
    auto& seq = item.sequence;
    seq.frames.resize(frames, cells);
    for (std::uint32_t f = 0; f < frames; ++f) {
      const std::size_t at = in.offset();
      const std::uint32_t n = in.u32le();
      if (n != static_cast<std::uint32_t>(cells)) {
        throw ParseError(path.string() + ": frame length does not match shape",
                         at);
      }
      seq.partial.push_back(in.u8() & 1);
      seq.t_begin.push_back(in.u64le());
      seq.t_end.push_back(in.u64le());
      for (std::uint32_t i = 0; i < n; ++i) seq.frames(f, i) = in.f32le();
      const std::uint8_t* mask = in.take((n + 7) / 8);
      for (std::uint32_t i = 0; i < n; ++i) {
        if (mask[i / 8] & (1u << (i % 8))) seq.frames(f, i) = kSilent<double>;
      }
    }
    cache.samples.push_back(std::move(item));
  }
  if (in.remaining() != 0) {
    throw ParseError(path.string() + ": trailing bytes after frame cache",
                     in.offset());
  }
  return cache;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace denn
