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

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "denn/events.hpp"
#include "denn/synthetic.hpp"
#include "event_oracle.hpp"

using namespace denn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "denn_test_events";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
}

Event ev(std::uint64_t t, int x, int y, int p = 1) {
  return {t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
          static_cast<std::int8_t>(p)};
}

}  // namespace

TEST_CASE("cell times") {
  // 2 x 2 sensor, 8 cells; r = 0.55 puts the threshold at 4.4.
  EventAccumulator acc({2, 2, 2}, 0.55);
  CHECK_FALSE(acc.push(ev(0, 0, 0)));
  CHECK_FALSE(acc.push(ev(2, 0, 0)));
  CHECK_FALSE(acc.push(ev(4, 0, 0)));
  CHECK_FALSE(acc.push(ev(5, 1, 0)));
  CHECK_FALSE(acc.push(ev(6, 0, 1, -1)));
  CHECK_FALSE(acc.push(ev(7, 1, 1, -1)));
  const auto f = acc.push(ev(9, 1, 1));
  REQUIRE(f);
  CHECK(f->times(cell_index({2, 2, 2}, ev(0, 0, 0))) == doctest::Approx(4.0 / 3.0));
  CHECK(f->times(cell_index({2, 2, 2}, ev(5, 1, 0))) == 0.0);
  CHECK(f->times(cell_index({2, 2, 2}, ev(7, 1, 1, -1))) == 0.0);
  CHECK(f->active == 5);
  CHECK(f->t_begin == 0);
  CHECK(f->t_end == 9);
  CHECK_FALSE(f->partial);
  CHECK(is_silent(f->times(cell_index({2, 2, 2}, ev(0, 0, 1)))));
  CHECK(acc.active() == 0);
}

TEST_CASE("threshold is strict") {
  // N = 4 pixels, r = 0.25: 2rN = 2, so the third distinct cell triggers.
  EventAccumulator acc({2, 2, 2}, 0.25);
  CHECK(acc.threshold() == 2.0);
  CHECK_FALSE(acc.push(ev(0, 0, 0)));
  CHECK_FALSE(acc.push(ev(1, 0, 0)));
  CHECK_FALSE(acc.push(ev(2, 1, 0)));
  const auto f = acc.push(ev(3, 0, 1));
  REQUIRE(f);
  CHECK(f->active == 3);
}

TEST_CASE("finalize") {
  EventAccumulator empty({2, 2, 2}, 0.5);
  CHECK_FALSE(empty.finalize());

  EventAccumulator one({2, 2, 2}, 0.5);
  one.push(ev(0, 0, 0));
  one.push(ev(3, 0, 0));
  CHECK_FALSE(one.finalize());

  // Threshold 4; three of eight cells active.
  EventAccumulator three({2, 2, 2}, 0.5);
  three.push(ev(0, 0, 0));
  three.push(ev(1, 1, 0));
  three.push(ev(2, 1, 1, -1));
  const auto f = three.finalize();
  REQUIRE(f);
  CHECK(f->partial);
  CHECK(f->active == 3);
}

TEST_CASE("timestamps must not go backwards") {
  EventAccumulator acc({2, 4, 4}, 0.5);
  acc.push(ev(10, 0, 0));
  acc.push(ev(10, 1, 0));
  CHECK_THROWS_AS(acc.push(ev(9, 2, 0)), EventOrderError);
  CHECK_THROWS_AS(acc.push(ev(11, 4, 0)), ShapeError);
}

TEST_CASE("busier cells are faster") {
  // Fixed span 12, more events: strictly smaller time.
  double previous = kSilent<double>;
  for (int n = 2; n <= 12; ++n) {
    EventAccumulator acc({2, 1, 4}, 0.9);
    for (int k = 0; k < n; ++k) acc.push(ev(k == n - 1 ? 12 : k, 0, 0));
    acc.push(ev(12, 1, 0));
    const auto f = acc.finalize();
    REQUIRE(f);
    const double t = f->times(cell_index({2, 1, 4}, ev(0, 0, 0)));
    CHECK(t == doctest::Approx(12.0 / n));
    CHECK(t < previous);
    previous = t;
  }
}

TEST_CASE("event2time matches the brute-force oracle") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> side(1, 6);
  std::uniform_real_distribution<double> rr(0.02, 0.6);
  for (int n = 0; n < 300; ++n) {
    const int h = side(rng), w = side(rng);
    const double r = rr(rng);
    const auto events = random_stream({2, h, w}, 400, rng);
    const FrameSequence seq = event2time(events, {2, h, w}, r);
    const auto want = oracle::brute_event2time(events, h, w, r);
    REQUIRE(static_cast<std::size_t>(seq.size()) == want.frames.size());
    CHECK(seq.dropped == want.dropped);
    for (Index f = 0; f < seq.size(); ++f) {
      const auto k = static_cast<std::size_t>(f);
      CHECK(seq.frames.row(f).transpose() == want.frames[k]);
      CHECK(seq.t_begin[k] == want.t_begin[k]);
      CHECK(seq.t_end[k] == want.t_end[k]);
      CHECK(seq.partial[k] == want.partial[k]);
      if (!want.partial[k]) CHECK(static_cast<double>(want.active[k]) > 2 * r * h * w);
    }
  }
}

TEST_CASE("streaming and bulk agree") {
  std::mt19937 rng(3);
  for (int n = 0; n < 50; ++n) {
    const auto events = random_stream({2, 5, 5}, 300, rng);
    EventAccumulator acc({2, 5, 5}, 0.2);
    std::vector<RawFrame> raw;
    for (const auto& e : events) {
      if (auto f = acc.push(e)) raw.push_back(*f);
    }
    if (auto f = acc.finalize()) raw.push_back(*f);
    const FrameSequence stream = standardize_raw_frames(raw, 50);
    const FrameSequence bulk = event2time(events, {2, 5, 5}, 0.2);
    CHECK(stream.frames == bulk.frames);
    CHECK(stream.t_end == bulk.t_end);
  }
}

TEST_CASE("frames are standardized over their active cells") {
  std::mt19937 rng(4);
  const auto events = poisson_stream({2, 16, 16}, 5.0, 20000, rng);
  const FrameSequence seq = event2time(events, {2, 16, 16}, 0.05);
  REQUIRE(seq.size() > 10);
  for (Index f = 0; f < seq.size(); ++f) {
    double sum = 0, sq = 0, n = 0;
    for (Index i = 0; i < seq.frames.cols(); ++i) {
      const double v = seq.frames(f, i);
      if (is_silent(v)) continue;
      sum += v;
      sq += v * v;
      ++n;
    }
    CHECK(std::abs(sum / n) <= 1e-9);
    CHECK(std::abs(sq / n - 1) <= 1e-9);
  }
}

TEST_CASE("frame span follows the event rate") {
  const double gap = 20.0, r = 0.05;
  std::mt19937 rng(5);
  const auto events = poisson_stream({2, 34, 34}, gap, 200000, rng);
  const FrameSequence seq = event2time(events, {2, 34, 34}, r);
  double span = 0;
  Index full = 0;
  for (Index f = 0; f < seq.size(); ++f) {
    if (seq.partial[static_cast<std::size_t>(f)]) continue;
    span += static_cast<double>(seq.t_end[static_cast<std::size_t>(f)] -
                                seq.t_begin[static_cast<std::size_t>(f)]);
    ++full;
  }
  const double expected = gap * 2 * r * 34 * 34;
  CHECK(span / static_cast<double>(full) == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("static image encoding") {
  VectorXd two(2);
  two << 0, 1;
  const Matrix z = encode_static_image(two);
  CHECK(z(0, 0) == doctest::Approx(1.0));
  CHECK(z(0, 1) == doctest::Approx(-1.0));

  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0, 0.8);
  VectorXd img(30);
  for (Index i = 0; i < img.size(); ++i) img(i) = u(rng);
  const Matrix a = encode_static_image(img);
  Index bright;
  img.maxCoeff(&bright);
  CHECK(a(0, bright) == a.minCoeff());
  const Matrix b = encode_static_image((img.array() + 0.2).matrix());
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(encode_static_image(VectorXd::Constant(9, 0.3)), DegenerateLayerError);

  // Background silencing; binarized digits keep the background.
  VectorXd digit(4);
  digit << 0, 0.5, 1.0, 0;
  const Matrix s = encode_static_image(digit, true);
  CHECK(is_silent(s(0, 0)));
  CHECK(s(0, 2) == doctest::Approx(-1.0));
  VectorXd binary(4);
  binary << 0, 1, 1, 0;
  const Matrix bs = encode_static_image(binary, true);
  CHECK(bs(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("idx files") {
  IdxImages im;
  im.shape = {1, 2, 3};
  im.pixels.resize(2, 6);
  im.pixels << 0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255;
  im.pixels /= 255.0;
  write_idx_images(scratch("a.idx"), im);
  write_idx_labels(scratch("a.lbl"), {3, 9});
  const IdxImages back = read_idx_images(scratch("a.idx"));
  CHECK(back.shape == im.shape);
  CHECK((back.pixels - im.pixels).cwiseAbs().maxCoeff() == 0.0);
  CHECK(read_idx_labels(scratch("a.lbl")) == std::vector<int>{3, 9});
  CHECK(read_idx_images(scratch("a.idx"), 1).pixels.rows() == 1);

  auto bytes = read_file(scratch("a.idx"));
  bytes[2] = 0x09;
  write_bytes(scratch("bad.idx"), bytes);
  CHECK_THROWS_AS(read_idx_images(scratch("bad.idx")), ParseError);
  bytes = read_file(scratch("a.idx"));
  bytes.resize(bytes.size() - 1);
  write_bytes(scratch("short.idx"), bytes);
  CHECK_THROWS_AS(read_idx_images(scratch("short.idx")), ParseError);
  CHECK_THROWS_AS(read_idx_labels(scratch("a.idx")), ParseError);

  const fs::path mnist = fs::path(DENN_DATA_DIR) / "mnist" / "train-images-idx3-ubyte";
  if (fs::exists(mnist)) {
    const IdxImages head = read_idx_images(mnist, 3);
    CHECK(head.shape == Shape3{1, 28, 28});
    CHECK(fs::file_size(mnist) == 16 + 60000ull * 28 * 28);
    const auto labels = read_idx_labels(fs::path(DENN_DATA_DIR) / "mnist" / "train-labels-idx1-ubyte");
    CHECK(labels.size() == 60000);
  }
}

TEST_CASE("n-mnist records") {
  const std::array<std::uint8_t, 5> a{0x03, 0x07, 0x80, 0x00, 0x01};
  const Event e = decode_nmnist(a);
  CHECK(e == ev(1, 3, 7, 1));
  const std::array<std::uint8_t, 5> z{0, 0, 0, 0, 0};
  CHECK(decode_nmnist(z) == ev(0, 0, 0, -1));

  std::array<std::uint8_t, 5> out{};
  const Event big = ev((1u << 23) - 1, 33, 12, -1);
  encode_nmnist(big, out);
  CHECK(decode_nmnist(out) == big);

  const std::vector<std::uint8_t> six(6, 0);
  CHECK_THROWS_AS(parse_nmnist(six), ParseError);
  std::vector<Event> stream{ev(1, 0, 0), ev(5, 2, 3, -1), ev(9, 33, 33)};
  write_nmnist(scratch("s.bin"), stream);
  CHECK(read_nmnist(scratch("s.bin")) == stream);
}

TEST_CASE("devt files") {
  std::vector<std::uint8_t> header{'D', 'E', 'V', 'T', 1, 0, 0, 0};
  CHECK(parse_canonical_events(header).empty());

  auto bytes = header;
  for (std::uint8_t b : {5, 0, 0, 0, 2, 0, 3, 0, 1}) bytes.push_back(b);
  for (std::uint8_t b : {7, 1, 0, 0, 4, 0, 0, 1, 0xff}) bytes.push_back(b);
  REQUIRE(bytes.size() == 26);
  const auto events = parse_canonical_events(bytes);
  REQUIRE(events.size() == 2);
  CHECK(events[0] == ev(5, 2, 3, 1));
  CHECK(events[1] == ev(263, 4, 256, -1));

  std::mt19937 rng(8);
  const auto stream = poisson_stream({2, 8, 8}, 3.0, 500, rng);
  write_canonical_events(scratch("p.devt"), stream);
  CHECK(read_canonical_events(scratch("p.devt")) == stream);

  auto bad = header;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse_canonical_events(bad), ParseError);
  auto version = header;
  version[4] = 2;
  CHECK_THROWS_AS(parse_canonical_events(version), ParseError);
  auto ragged = bytes;
  ragged.pop_back();
  CHECK_THROWS_AS(parse_canonical_events(ragged), ParseError);
}

TEST_CASE("frame cache round trip") {
  std::mt19937 rng(10);
  FrameCache cache;
  cache.shape = {2, 6, 6};
  for (int k = 0; k < 4; ++k) {
    const auto events = poisson_stream({2, 6, 6}, 4.0, 300, rng);
    cache.samples.push_back({k % 3, event2time(events, {2, 6, 6}, 0.2)});
  }
  write_frame_cache(scratch("c.dfrm"), cache);
  const FrameCache back = read_frame_cache(scratch("c.dfrm"));
  CHECK(back.shape == cache.shape);
  REQUIRE(back.samples.size() == cache.samples.size());
  for (std::size_t k = 0; k < cache.samples.size(); ++k) {
    const auto& a = cache.samples[k].sequence;
    const auto& b = back.samples[k].sequence;
    CHECK(back.samples[k].label == cache.samples[k].label);
    REQUIRE(a.frames.rows() == b.frames.rows());
    for (Index i = 0; i < a.frames.size(); ++i) {
      const double x = a.frames.data()[i], y = b.frames.data()[i];
      if (is_silent(x)) {
        CHECK(is_silent(y));
      } else {
        CHECK(y == static_cast<double>(static_cast<float>(x)));
      }
    }
    CHECK(a.t_begin == b.t_begin);
    CHECK(a.partial == b.partial);
  }
  // Same input, same bytes.
  write_frame_cache(scratch("d.dfrm"), cache);
  CHECK(read_file(scratch("c.dfrm")) == read_file(scratch("d.dfrm")));
}
