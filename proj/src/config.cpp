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

#include "denn/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace denn {

using nlohmann::json;

std::string to_string(DataFormat format) {
  switch (format) {
    case DataFormat::kNone:
      return "none";
    case DataFormat::kIdx:
      return "idx";
    case DataFormat::kNmnist:
      return "nmnist";
    case DataFormat::kCanonical:
      return "devt";
    case DataFormat::kFrames:
      return "frames";
  }
  return "none";
}

DataFormat parse_data_format(std::string_view name) {
  if (name == "none") return DataFormat::kNone;
  if (name == "idx") return DataFormat::kIdx;
  if (name == "nmnist") return DataFormat::kNmnist;
  if (name == "devt") return DataFormat::kCanonical;
  if (name == "frames") return DataFormat::kFrames;
  throw ConfigError("unknown data format '" + std::string(name) +
                    "' (idx, nmnist, devt, frames)");
}

std::string to_string(Scheduler scheduler) {
  return scheduler == Scheduler::kNone ? "none" : "cosine";
}

Scheduler parse_scheduler(std::string_view name) {
  if (name == "none") return Scheduler::kNone;
  if (name == "cosine" || name == "CosineAnnealing") {
    return Scheduler::kCosineAnnealing;
  }
  throw ConfigError("unknown scheduler '" + std::string(name) + "'");
}

KernelSpec parse_kernel(std::string_view name) {
  if (name == "exponential" || name == "exp") return KernelSpec::exponential();
  if (name == "inverse") return KernelSpec::inverse();
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

RunConfig preset_config(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  c.network = architecture_preset(name);
  c.training.learning_rate = 1e-3;
  if (name == "mnist") {
    c.training.batch_size = 4096;
    c.training.seed = 22756400;
    c.training.epochs = 50;
    c.preprocessing.silence_background = true;
    c.data.format = DataFormat::kIdx;
  } else if (name == "cifar10") {
    c.training.batch_size = 512;
    c.training.seed = 76446569;
    c.training.epochs = 50;
    c.data.format = DataFormat::kIdx;
  } else if (name == "nmnist") {
    c.training.batch_size = 16;
    c.training.seed = 94240977;
    c.training.epochs = 10;
    c.preprocessing.r = 0.05;
    c.preprocessing.delta = 4;
    c.data.format = DataFormat::kNmnist;
  } else if (name == "dvs-gesture") {
    c.training.batch_size = 16;
    c.training.seed = 98074194;
    c.training.epochs = 10;
    c.preprocessing.r = 0.05;
    c.preprocessing.delta = 4;
    c.data.format = DataFormat::kCanonical;
  } else if (name == "gsc") {
    c.training.batch_size = 700;
    c.training.seed = 36887311;
    c.training.epochs = 10;
    c.training.scheduler = Scheduler::kCosineAnnealing;
    c.preprocessing.r = 0.1;
    c.preprocessing.delta = 1;
    c.data.format = DataFormat::kCanonical;
  }
  c.output_dir = "runs/" + std::string(name);
  return c;
}

namespace {

void check_keys(const json& j, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) {
    throw ConfigError(std::string(where) + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) {
      throw ConfigError("unknown key '" + std::string(where) + "." + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, std::string_view where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

}  // namespace

void validate(const RunConfig& c) {
  const auto& t = c.training;
  if (!(t.learning_rate > 0 && t.learning_rate < 1)) {
    throw ConfigError("training.learning_rate must lie in (0, 1)");
  }
  if (t.batch_size <= 0) throw ConfigError("training.batch_size must be > 0");
  if (t.epochs < 0) throw ConfigError("training.epochs must be >= 0");
  if (t.threads < 0) throw ConfigError("training.threads must be >= 0");
  if (!(c.network.q > 0 && c.network.q <= 1)) {
    throw ConfigError("regime.q must lie in (0, 1]");
  }
  if (c.network.nu < 0) throw ConfigError("preprocessing.nu must be >= 0");
  if (!(c.preprocessing.r > 0 && c.preprocessing.r < 1)) {
    throw ConfigError("preprocessing.r must lie in (0, 1)");
  }
  if (c.network.layers.empty()) throw ConfigError("architecture has no layers");
  if (c.network.input.size() <= 0) {
    throw ConfigError("architecture.input must be positive");
  }
  // Building the network checks layer compatibility.
  Network probe(c.network, 0);
  (void)probe;
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"preset", "architecture", "kernel", "regime", "training",
              "preprocessing", "data", "output_dir"});
  RunConfig c;
  if (root.contains("preset")) {
    std::string preset;
    read(root, "preset", "config", preset);
    c = preset_config(preset);
  }
  if (root.contains("architecture")) {
    const json& a = root["architecture"];
    check_keys(a, "architecture", {"input", "layers"});
    if (a.contains("input")) {
      std::vector<int> dims;
      read(a, "input", "architecture", dims);
      if (dims.size() != 3) {
        throw ConfigError("architecture.input must be [channels, height, width]");
      }
      c.network.input = {dims[0], dims[1], dims[2]};
    }
    if (a.contains("layers")) {
      std::string layers;
      read(a, "layers", "architecture", layers);
      NetworkSpec parsed = NetworkSpec::parse(c.network.input, layers);
      c.network.layers = parsed.layers;
    }
  }
  if (root.contains("kernel")) {
    std::string kernel;
    read(root, "kernel", "config", kernel);
    c.network.kernel = parse_kernel(kernel);
  }
  if (root.contains("regime")) {
    const json& r = root["regime"];
    check_keys(r, "regime", {"q"});
    read(r, "q", "regime", c.network.q);
  }
  if (root.contains("training")) {
    const json& t = root["training"];
    check_keys(t, "training",
               {"learning_rate", "batch_size", "epochs", "scheduler", "seed",
                "threads"});
    read(t, "learning_rate", "training", c.training.learning_rate);
    read(t, "batch_size", "training", c.training.batch_size);
    read(t, "epochs", "training", c.training.epochs);
    read(t, "seed", "training", c.training.seed);
    read(t, "threads", "training", c.training.threads);
    if (t.contains("scheduler")) {
      std::string s;
      read(t, "scheduler", "training", s);
      c.training.scheduler = parse_scheduler(s);
    }
  }
  if (root.contains("preprocessing")) {
    const json& p = root["preprocessing"];
    check_keys(p, "preprocessing", {"r", "delta", "nu", "silence_background"});
    read(p, "r", "preprocessing", c.preprocessing.r);
    read(p, "delta", "preprocessing", c.preprocessing.delta);
    read(p, "nu", "preprocessing", c.network.nu);
    read(p, "silence_background", "preprocessing",
         c.preprocessing.silence_background);
  }
  if (root.contains("data")) {
    const json& d = root["data"];
    check_keys(d, "data",
               {"format", "train", "train_labels", "test", "test_labels",
                "train_limit", "test_limit"});
    if (d.contains("format")) {
      std::string f;
      read(d, "format", "data", f);
      c.data.format = parse_data_format(f);
    }
    read(d, "train", "data", c.data.train);
    read(d, "train_labels", "data", c.data.train_labels);
    read(d, "test", "data", c.data.test);
    read(d, "test_labels", "data", c.data.test_labels);
    read(d, "train_limit", "data", c.data.train_limit);
    read(d, "test_limit", "data", c.data.test_limit);
  }
  read(root, "output_dir", "config", c.output_dir);
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json root;
  if (!c.preset.empty()) root["preset"] = c.preset;
  root["architecture"] = {
      {"input",
       {c.network.input.channels, c.network.input.height, c.network.input.width}},
      {"layers", c.network.layers_string()}};
  root["kernel"] = to_string(c.network.kernel.kind);
  root["regime"] = {{"q", c.network.q}};
  root["training"] = {{"learning_rate", c.training.learning_rate},
                      {"batch_size", c.training.batch_size},
                      {"epochs", c.training.epochs},
                      {"scheduler", to_string(c.training.scheduler)},
                      {"seed", c.training.seed},
                      {"threads", c.training.threads}};
  root["preprocessing"] = {
      {"r", c.preprocessing.r},
      {"delta", c.preprocessing.delta},
      {"nu", c.network.nu},
      {"silence_background", c.preprocessing.silence_background}};
  root["data"] = {{"format", to_string(c.data.format)},
                  {"train", c.data.train},
                  {"train_labels", c.data.train_labels},
                  {"test", c.data.test},
                  {"test_labels", c.data.test_labels},
                  {"train_limit", c.data.train_limit},
                  {"test_limit", c.data.test_limit}};
  root["output_dir"] = c.output_dir;
  return root.dump(2);
}

std::uint64_t config_hash(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(c.network.input) << '|' << c.network.layers_string() << '|'
     << to_string(c.network.kernel.kind) << '|' << c.network.kernel.inverse_shift
     << '|' << c.network.kernel.inverse_floor << '|' << c.network.q << '|'
     << c.network.nu << '|' << c.network.inhibit_input << '|'
     << c.network.floor_pooling << '|' << c.preprocessing.silence_background;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace denn
