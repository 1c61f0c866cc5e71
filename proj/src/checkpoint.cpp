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

#include "denn/checkpoint.hpp"

#include <cstring>
#include <map>
#include <sstream>

#include "denn/events.hpp"
#include "io_util.hpp"

namespace denn {

std::vector<std::uint8_t> encode_tensors(const std::vector<NamedTensor>& tensors) {
  ByteWriter out;
  out.text("DENN");
  out.u32le(kCheckpointVersion);
  out.u32le(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    std::uint64_t count = 1;
    for (auto d : t.dims) count *= d;
    if (count != t.values.size()) {
      throw ShapeError("tensor " + t.name + " dims do not match its payload");
    }
    out.u32le(static_cast<std::uint32_t>(t.name.size()));
    out.text(t.name);
    out.u32le(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) out.u64le(d);
    for (double v : t.values) out.f64le(v);
  }
  return out.data();
}

std::vector<NamedTensor> decode_tensors(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "DENN", 4) != 0) {
    throw ParseError("missing DENN magic", 0);
  }
  in.take(4);
  const std::uint32_t version = in.u32le();
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version),
                     4);
  }
  const std::uint32_t count = in.u32le();
  std::vector<NamedTensor> tensors(count);
  for (auto& t : tensors) {
    const std::uint32_t len = in.u32le();
    const auto* name = in.take(len);
    t.name.assign(reinterpret_cast<const char*>(name), len);
    const std::uint32_t rank = in.u32le();
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(in.u64le());
      n *= t.dims.back();
    }
    if (n > in.remaining() / 8) {
      throw ParseError("tensor " + t.name + " overruns the file", in.offset());
    }
    t.values.resize(n);
    for (auto& v : t.values) v = in.f64le();
  }
  if (in.remaining() != 0) {
    throw ParseError("trailing bytes after the last tensor", in.offset());
  }
  return tensors;
}

namespace {

NamedTensor vector_tensor(std::string name, std::span<const double> values) {
  return {std::move(name), {values.size()},
          std::vector<double>(values.begin(), values.end())};
}

NamedTensor scalar_tensor(std::string name, double v) {
  return {std::move(name), {1}, {v}};
}

NamedTensor text_tensor(std::string name, const std::string& text) {
  NamedTensor t{std::move(name), {text.size()}, {}};
  for (unsigned char c : text) t.values.push_back(c);
  return t;
}

std::string tensor_text(const NamedTensor& t) {
  std::string s;
  for (double v : t.values) s.push_back(static_cast<char>(static_cast<int>(v)));
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const RunConfig& config, const TrainerState* state) {
  std::vector<NamedTensor> tensors;
  const std::uint64_t hash = config_hash(config);
  tensors.push_back({"meta.config_hash",
                     {2},
                     {static_cast<double>(hash >> 32),
                      static_cast<double>(hash & 0xFFFFFFFFull)}});
  tensors.push_back(text_tensor("meta.config", config_to_json(config)));
  // parameters() needs a mutable network; the views are only read here.
  auto views = const_cast<Network&>(net).parameters();
  for (const auto& v : views) tensors.push_back(vector_tensor(v.name, v.values));
  if (state) {
    const auto& m = state->adam.first_moments();
    const auto& s = state->adam.second_moments();
    for (std::size_t k = 0; k < views.size() && k < m.size(); ++k) {
      tensors.push_back(vector_tensor("adam.m." + views[k].name,
                                      {m[k].data(), static_cast<std::size_t>(m[k].size())}));
      tensors.push_back(vector_tensor("adam.v." + views[k].name,
                                      {s[k].data(), static_cast<std::size_t>(s[k].size())}));
    }
    tensors.push_back(
        scalar_tensor("adam.step", static_cast<double>(state->adam.steps())));
    tensors.push_back(scalar_tensor("trainer.epoch", state->epoch));
    std::ostringstream rng;
    rng << state->rng;
    std::istringstream words(rng.str());
    NamedTensor r{"rng.mt19937", {0}, {}};
    std::uint64_t word;
    while (words >> word) r.values.push_back(static_cast<double>(word));
    r.dims[0] = r.values.size();
    tensors.push_back(std::move(r));
  }
  ByteWriter out;
  out.bytes(encode_tensors(tensors));
  out.save(path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const RunConfig* expected) {
  std::vector<NamedTensor> tensors;
  try {
    tensors = decode_tensors(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  auto find = [&](const std::string& name) -> const NamedTensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ParseError(path.string() + ": missing tensor " + name, 0);
    }
    return *it->second;
  };
  LoadedCheckpoint out;
  const auto& h = find("meta.config_hash");
  out.hash = (static_cast<std::uint64_t>(h.values.at(0)) << 32) |
             static_cast<std::uint64_t>(h.values.at(1));
  out.config = parse_config(tensor_text(find("meta.config")));
  if (config_hash(out.config) != out.hash) {
    throw ConfigError(path.string() + ": stored config does not match its hash");
  }
  if (expected && config_hash(*expected) != out.hash) {
    throw ConfigError(path.string() +
                      ": checkpoint was trained with a different architecture "
                      "or regime (config hash mismatch)");
  }
  out.net = Network(out.config.network, out.config.training.seed);
  auto views = out.net.parameters();
  for (auto& v : views) {
    const auto& t = find(v.name);
    if (t.values.size() != v.values.size()) {
      throw ParseError(path.string() + ": tensor " + v.name + " has wrong size",
                       0);
    }
    std::copy(t.values.begin(), t.values.end(), v.values.begin());
  }
  out.net.refresh();
  if (by_name.count("adam.step")) {
    TrainerState state;
    state.adam = Adam(views);
    for (std::size_t k = 0; k < views.size(); ++k) {
      const auto& m = find("adam.m." + views[k].name);
      const auto& s = find("adam.v." + views[k].name);
      state.adam.first_moments()[k] =
          Eigen::Map<const VectorXd>(m.values.data(), static_cast<Index>(m.values.size()));
      state.adam.second_moments()[k] =
          Eigen::Map<const VectorXd>(s.values.data(), static_cast<Index>(s.values.size()));
    }
    state.adam.set_steps(static_cast<std::uint64_t>(find("adam.step").values.at(0)));
    state.epoch = static_cast<int>(find("trainer.epoch").values.at(0));
    std::ostringstream words;
    for (double w : find("rng.mt19937").values) {
      words << static_cast<std::uint64_t>(w) << ' ';
    }
    std::istringstream in(words.str());
    in >> state.rng;
    out.state = std::move(state);
  }
  return out;
}

}  // namespace denn
