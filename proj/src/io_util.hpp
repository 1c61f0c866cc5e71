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

// Bounds-checked byte cursor and an append-only byte buffer.

#ifndef DENN_SRC_IO_UTIL_HPP_
#define DENN_SRC_IO_UTIL_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "denn/types.hpp"

namespace denn {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  const std::uint8_t* take(std::size_t n) {
    if (n > remaining()) {
      throw ParseError("unexpected end of data (need " + std::to_string(n) +
                           " bytes, have " + std::to_string(remaining()) + ")",
                       pos_);
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint8_t u8() { return *take(1); }
  std::uint16_t u16le() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32le() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64le() { return le(8); }
  std::uint32_t u32be() {
    const std::uint8_t* p = take(4);
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[2]} << 8) | p[3];
  }
  float f32le() { return std::bit_cast<float>(u32le()); }
  double f64le() { return std::bit_cast<double>(u64le()); }

 private:
  std::uint64_t le(int n) {
    const std::uint8_t* p = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16le(std::uint16_t v) { le(v, 2); }
  void u32le(std::uint32_t v) { le(v, 4); }
  void u64le(std::uint64_t v) { le(v, 8); }
  void u32be(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back((v >> s) & 0xFF);
  }
  void f32le(float v) { u32le(std::bit_cast<std::uint32_t>(v)); }
  void f64le(double v) { u64le(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }
  void text(const std::string& s) {
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  const std::vector<std::uint8_t>& data() const { return buf_; }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back((v >> (8 * i)) & 0xFF);
  }

  std::vector<std::uint8_t> buf_;
};

}  // namespace denn

#endif  // DENN_SRC_IO_UTIL_HPP_
