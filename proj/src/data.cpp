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

#include "denn/data.hpp"

#include <algorithm>
#include <charconv>
#include <map>

namespace denn {

namespace fs = std::filesystem;

std::vector<std::pair<int, fs::path>> list_labeled_files(const fs::path& root,
                                                         std::size_t limit) {
  if (!fs::is_directory(root)) {
    throw ConfigError(root.string() + " is not a directory of label folders");
  }
  std::map<int, std::vector<fs::path>> by_label;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    int label = 0;
    auto [end, ec] = std::from_chars(name.data(), name.data() + name.size(), label);
    if (ec != std::errc() || end != name.data() + name.size() || label < 0) continue;
    auto& files = by_label[label];
    for (const auto& f : fs::directory_iterator(entry.path())) {
      if (f.is_regular_file()) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
  }
  std::vector<std::pair<int, fs::path>> out;
  for (std::size_t round = 0;; ++round) {
    bool any = false;
    for (const auto& [label, files] : by_label) {
      if (round >= files.size()) continue;
      any = true;
      out.emplace_back(label, files[round]);
      if (limit && out.size() == limit) return out;
    }
    if (!any) break;
  }
  return out;
}

namespace {

const std::string& split_path(const DataConfig& d, Split split) {
  return split == Split::kTrain ? d.train : d.test;
}

std::size_t split_limit(const DataConfig& d, Split split) {
  return split == Split::kTrain ? d.train_limit : d.test_limit;
}

}  // namespace

FrameCache preprocess_split(const RunConfig& config, Split split,
                            LoadStats* stats) {
  const auto& d = config.data;
  if (d.format != DataFormat::kNmnist && d.format != DataFormat::kCanonical) {
    throw ConfigError("preprocessing needs an event format (nmnist or devt)");
  }
  const std::string& root = split_path(d, split);
  if (root.empty()) throw ConfigError("no path configured for this split");
  const Shape3 cells = config.network.input;
  if (cells.channels != 2) {
    throw ConfigError("event data needs a 2-channel (polarity) input");
  }
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  FrameCache cache;
  cache.shape = cells;
  double span = 0;
  for (const auto& [label, path] : list_labeled_files(root, split_limit(d, split))) {
    std::vector<Event> events;
    try {
      events = d.format == DataFormat::kNmnist ? read_nmnist(path)
                                               : read_canonical_events(path);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), e.offset());
    }
    FrameSequence seq;
    try {
      seq = event2time(events, cells, config.preprocessing.r);
    } catch (const EventOrderError& e) {
      throw EventOrderError(path.string() + ": " + e.what());
    }
    st.dropped_frames += seq.dropped;
    if (seq.size() == 0) {
      ++st.skipped;
      st.warnings.push_back(path.string() + ": no frame, sample skipped");
      continue;
    }
    for (Index f = 0; f < seq.size(); ++f) {
      span += static_cast<double>(seq.t_end[static_cast<std::size_t>(f)] -
                                  seq.t_begin[static_cast<std::size_t>(f)]);
    }
    st.frames += static_cast<std::uint64_t>(seq.size());
    ++st.samples;
    cache.samples.push_back({label, std::move(seq)});
  }
  st.mean_span_us = st.frames ? span / static_cast<double>(st.frames) : 0.0;
  return cache;
}

Dataset load_split(const RunConfig& config, Split split, LoadStats* stats) {
  const auto& d = config.data;
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  Dataset data;
  data.shape = config.network.input;
  auto check_shape = [&](const Shape3& shape, const std::string& what) {
    if (shape.size() != config.network.input.size()) {
      throw ConfigError(what + " holds " + to_string(shape) +
                        " inputs but the architecture expects " +
                        to_string(config.network.input));
    }
  };
  switch (d.format) {
    case DataFormat::kIdx: {
      const std::string& images = split_path(d, split);
      const std::string& labels =
          split == Split::kTrain ? d.train_labels : d.test_labels;
      if (images.empty() || labels.empty()) {
        throw ConfigError("idx data needs image and label paths");
      }
      const auto limit = split_limit(d, split);
      IdxImages im = read_idx_images(images, limit);
      const auto y = read_idx_labels(labels, limit);
      if (y.size() != static_cast<std::size_t>(im.pixels.rows())) {
        throw ParseError(labels + ": label count does not match the images", 0);
      }
      check_shape(im.shape, images);
      for (Index i = 0; i < im.pixels.rows(); ++i) {
        try {
          data.samples.push_back(
              {encode_static_image(im.pixels.row(i).transpose(),
                                   config.preprocessing.silence_background),
               y[static_cast<std::size_t>(i)]});
          ++st.frames;
          ++st.samples;
        } catch (const DegenerateLayerError&) {
          ++st.skipped;
          st.warnings.push_back(images + ": image " + std::to_string(i) +
                                " is constant, skipped");
        }
      }
      break;
    }
    case DataFormat::kNmnist:
    case DataFormat::kCanonical:
    case DataFormat::kFrames: {
      FrameCache cache;
      if (d.format == DataFormat::kFrames) {
        cache = read_frame_cache(split_path(d, split));
        check_shape(cache.shape, split_path(d, split));
        const auto limit = split_limit(d, split);
        if (limit && cache.samples.size() > limit) cache.samples.resize(limit);
        for (const auto& s : cache.samples) st.frames += static_cast<std::uint64_t>(s.sequence.size());
        st.samples = cache.samples.size();
      } else {
        cache = preprocess_split(config, split, &st);
      }
      for (auto& s : cache.samples) {
        data.samples.push_back({std::move(s.sequence.frames), s.label});
      }
      break;
    }
    case DataFormat::kNone:
      throw ConfigError("no data format configured");
  }
  for (const auto& s : data.samples) data.classes = std::max(data.classes, s.label + 1);
  return data;
}

}  // namespace denn
