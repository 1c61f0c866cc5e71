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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "denn/checkpoint.hpp"
#include "denn/config.hpp"
#include "denn/data.hpp"
#include "denn/diagnostics.hpp"
#include "denn/synthetic.hpp"

using namespace denn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "denn_test_cli_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI, returns the exit status and leaves stdout in `out`.
int run(const std::string& args, std::string* out = nullptr) {
  const fs::path log = scratch("cli.log");
  const std::string cmd = std::string(DENN_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (out) *out = slurp(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Dataset toy(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  Dataset d;
  d.shape = {1, 1, 8};
  d.classes = 3;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix x(3, 8);
    for (Index k = 0; k < x.size(); ++k) x.data()[k] = normal(rng);
    d.samples.push_back({standardize_frames(x), static_cast<int>(i % 3)});
  }
  return d;
}

std::vector<double> flatten(Network& net) {
  std::vector<double> out;
  for (const auto& p : net.parameters()) out.insert(out.end(), p.values.begin(), p.values.end());
  return out;
}

}  // namespace

TEST_CASE("presets") {
  const RunConfig mnist = preset_config("mnist");
  CHECK(mnist.training.batch_size == 4096);
  CHECK(mnist.training.learning_rate == 1e-3);
  CHECK(mnist.training.seed == 22756400);
  CHECK(mnist.training.scheduler == Scheduler::kNone);
  CHECK(mnist.network.layers_string() == "100-10");
  const RunConfig gsc = preset_config("gsc");
  CHECK(gsc.training.scheduler == Scheduler::kCosineAnnealing);
  CHECK(gsc.network.nu == 25);
  CHECK(gsc.preprocessing.r == 0.1);
  const RunConfig nmnist = preset_config("nmnist");
  CHECK(nmnist.preprocessing.r == 0.05);
  CHECK(nmnist.preprocessing.delta == 4);
  CHECK(nmnist.training.batch_size == 16);
  CHECK_THROWS_AS(preset_config("svhn"), ConfigError);
}

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(R"({
    "preset": "mnist",
    "regime": {"q": 0.5},
    "training": {"epochs": 3, "scheduler": "cosine"},
    "preprocessing": {"nu": 2},
    "data": {"train_limit": 100}
  })");
  CHECK(c.network.q == 0.5);
  CHECK(c.training.epochs == 3);
  CHECK(c.training.batch_size == 4096);
  CHECK(c.training.scheduler == Scheduler::kCosineAnnealing);
  CHECK(c.network.nu == 2);
  CHECK(c.data.train_limit == 100);

  const RunConfig again = parse_config(config_to_json(c));
  CHECK(again.network == c.network);
  CHECK(again.training.seed == c.training.seed);
  CHECK(again.preprocessing == c.preprocessing);
  CHECK(config_hash(again) == config_hash(c));

  CHECK_THROWS_AS(parse_config(R"({"preset": "mnist", "epochs": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"preset": "mnist", "training": {"lr": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"preset": "mnist", "regime": {"q": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"preset": "mnist", "training": {"learning_rate": 1.5}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"preset": "mnist", "training": {"epochs": "ten"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"architecture": {"input": [1, 4, 4], "layers": "p2s2"}})"),
                  ConfigError);
}

TEST_CASE("config hash tracks the model") {
  RunConfig a = preset_config("mnist");
  RunConfig b = a;
  b.training.epochs = 7;
  b.data.train = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  for (int field = 0; field < 4; ++field) {
    RunConfig c = a;
    if (field == 0) c.network.q = 0.5;
    if (field == 1) c.network.nu = 1;
    if (field == 2) c.network.kernel = KernelSpec::inverse();
    if (field == 3) c.network.layers = NetworkSpec::parse(c.network.input, "50-10").layers;
    CHECK(config_hash(c) != config_hash(a));
  }
}

TEST_CASE("tensor container") {
  std::vector<NamedTensor> t{{"a", {2, 3}, {1, 2, 3, 4, 5, 6}}, {"b", {}, {0.25}}};
  const auto bytes = encode_tensors(t);
  CHECK(bytes[0] == 'D');
  const auto back = decode_tensors(bytes);
  REQUIRE(back.size() == 2);
  CHECK(back[0].dims == t[0].dims);
  CHECK(back[0].values == t[0].values);
  CHECK(back[1].values == t[1].values);
  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(decode_tensors(bad), ParseError);
  bad = bytes;
  bad.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_tensors(bad), ParseError);
}

TEST_CASE("checkpoint round trip") {
  RunConfig config;
  config.network = NetworkSpec::parse({1, 1, 8}, "6-5-3");
  config.network.q = 0.5;
  config.network.nu = 2;
  config.network.kernel = KernelSpec::inverse();
  config.training.batch_size = 4;
  config.training.epochs = 2;
  config.training.learning_rate = 0.01;
  config.training.seed = 5;
  const Dataset data = toy(12, 1);

  Network net(config.network, 5);
  TrainerState state = make_trainer_state(net, config.training);
  train_epoch(net, data, config.training, state);
  save_checkpoint(scratch("a.denn"), net, config, &state);

  LoadedCheckpoint ck = load_checkpoint(scratch("a.denn"), &config);
  for (const auto& s : data.samples) {
    CHECK(ck.net.forward(s.frames) == net.forward(s.frames));
  }
  CHECK(ck.config.network == config.network);
  CHECK(ck.hash == config_hash(config));
  REQUIRE(ck.state);
  CHECK(ck.state->epoch == 1);
  CHECK(ck.state->rng == state.rng);
  CHECK(ck.state->adam.steps() == state.adam.steps());

  // Resuming equals running straight through.
  train_epoch(net, data, config.training, state);
  train_epoch(ck.net, data, config.training, *ck.state);
  CHECK(flatten(ck.net) == flatten(net));

  RunConfig other = config;
  other.network.q = 1.0;
  CHECK_THROWS_AS(load_checkpoint(scratch("a.denn"), &other), ConfigError);
  save_checkpoint(scratch("b.denn"), net, config);
  CHECK_FALSE(load_checkpoint(scratch("b.denn")).state);
}

TEST_CASE("posterior trace") {
  Network net(NetworkSpec::parse({1, 1, 8}, "6-3"), 2);
  const Dataset data = toy(1, 3);
  const Matrix trace = posterior_trace(net, data.samples[0].frames);
  REQUIRE(trace.rows() == 3);
  for (Index s = 0; s < trace.rows(); ++s) {
    CHECK(std::abs(trace.row(s).sum() - 1) <= 1e-12);
  }
  CHECK((trace.row(2).transpose() - temporal_softmin(net.forward(data.samples[0].frames)))
            .cwiseAbs()
            .maxCoeff() <= 1e-15);
}

TEST_CASE("delta maps") {
  NetworkSpec spec = NetworkSpec::parse({1, 1, 8}, "6-4-3");
  spec.nu = 2;
  Network net(spec, 2);
  for (auto& st : net.stages()) st.memory.alpha_raw.setConstant(0.3);
  Matrix frames = toy(1, 4).samples[0].frames;
  frames.row(1) = frames.row(0);
  const auto maps = delta_maps(net, frames);
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].rows() == 2);
  CHECK(maps[0].row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(maps[1].row(0).cwiseAbs().maxCoeff() == 0.0);
  std::ostringstream os;
  write_delta_csv(os, maps);
  CHECK(os.str().rfind("layer,frame,neuron,delta\n", 0) == 0);
}

TEST_CASE("skewness and histograms") {
  VectorXd sym(5);
  sym << -2, -1, 0, 1, 2;
  CHECK(skewness(sym) == doctest::Approx(0.0));
  VectorXd right(4);
  right << 0, 0, 0, 4;
  // Population skewness of {0, 0, 0, 4}.
  CHECK(skewness(right) == doctest::Approx(2.0 / std::sqrt(3.0)));

  Network net(NetworkSpec::parse({1, 1, 8}, "6-3"), 2);
  const Dataset data = toy(9, 5);
  const auto hists = spike_time_histograms(net, data, 20);
  REQUIRE(hists.size() == 2);
  std::uint64_t total = 0;
  for (auto c : hists[0].counts) total += c;
  CHECK(total == 9 * 3 * 6);
  const Matrix skew = class_skewness(net, data, 0);
  CHECK(skew.rows() == 3);
  CHECK(skew(0, 1) == 9);  // three samples of three frames
}

TEST_CASE("synaptic impact and activity curve") {
  Network net(NetworkSpec::parse({1, 1, 8}, "6-3"), 2);
  const Dataset data = toy(6, 6);
  const auto impact = synaptic_impact(net, data);
  REQUIRE(impact.size() == 3);
  CHECK(impact[0].rows() == 3);
  CHECK(impact[0].cols() == 6);

  const ActivityCurve curve = activity_curve(KernelSpec::exponential(), 0.0, 1.0, 3.0, 7);
  REQUIRE(curve.signed_delay.size() == 7);
  CHECK(curve.signed_delay(3) == 0.0);
  CHECK(curve.corrected(3) == 0.0);
  CHECK(curve.corrected(6) == doctest::Approx(0.63199715663914763).epsilon(1e-15));
  CHECK(curve.uncorrected(6) - curve.corrected(6) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("labelled directory layout") {
  const fs::path root = scratch("events");
  fs::remove_all(root);
  std::mt19937 rng(7);
  for (int label : {0, 1}) {
    fs::create_directories(root / std::to_string(label));
    for (int k = 0; k < 3; ++k) {
      const auto events = poisson_stream({2, 6, 6}, 5.0, 400, rng);
      write_nmnist(root / std::to_string(label) / ("s" + std::to_string(k) + ".bin"), events);
    }
  }
  write_nmnist(root / "1" / "s3.bin", {});
  fs::create_directories(root / "notes");

  const auto listed = list_labeled_files(root, 3);
  REQUIRE(listed.size() == 3);
  CHECK(listed[0].first == 0);
  CHECK(listed[1].first == 1);
  CHECK(listed[2].second.filename() == "s1.bin");

  RunConfig config;
  config.network = NetworkSpec::parse({2, 6, 6}, "5-2");
  config.preprocessing.r = 0.2;
  config.data.format = DataFormat::kNmnist;
  config.data.train = root.string();
  LoadStats st;
  const Dataset d = load_split(config, Split::kTrain, &st);
  CHECK(d.size() == 6);
  CHECK(st.skipped == 1);
  CHECK(st.warnings.size() == 1);
  CHECK(d.classes == 2);
  CHECK(st.mean_span_us > 0);

  const FrameCache a = preprocess_split(config, Split::kTrain);
  write_frame_cache(scratch("x.dfrm"), a);
  write_frame_cache(scratch("y.dfrm"), preprocess_split(config, Split::kTrain));
  CHECK(read_file(scratch("x.dfrm")) == read_file(scratch("y.dfrm")));

  config.network = NetworkSpec::parse({1, 6, 6}, "5-2");
  CHECK_THROWS_AS(load_split(config, Split::kTrain), ConfigError);
}

TEST_CASE("command line") {
  std::string out;
  CHECK(run("energy --counts 14804 --preset mnist-q1", &out) == 0);
  CHECK(out.find("73.169 uJ") != std::string::npos);
  CHECK(run("energy --counts 8135 --preset mnist-q05", &out) == 0);
  CHECK(out.find("40.219 uJ") != std::string::npos);
  CHECK(run("energy --counts 0 --preset mnist", &out) == 0);
  CHECK(out.find("0.000 uJ") != std::string::npos);

  CHECK(run("gradcheck --cases 4 --kernel inverse --q 0.5", &out) == 0);
  CHECK(out.find("PASS") != std::string::npos);
  CHECK(run("gradcheck --cases 2 --tolerance 0", &out) == 1);
  CHECK(run("frobnicate", &out) != 0);
  CHECK(run("train --preset mnist --format idx --train /nonexistent --train-labels /x", &out) == 2);
}

TEST_CASE("command line end to end") {
  const fs::path dir = scratch("e2e");
  fs::remove_all(dir);
  fs::create_directories(dir);
  OrderTaskOptions opts;
  opts.features = 8;
  const Dataset task = frame_order_task(12, 3, opts);
  FrameCache cache;
  cache.shape = task.shape;
  for (const auto& s : task.samples) {
    FrameSequence seq;
    seq.frames = s.frames;
    const auto m = static_cast<std::size_t>(s.frames.rows());
    seq.t_begin.assign(m, 0);
    seq.t_end.assign(m, 0);
    seq.partial.assign(m, false);
    cache.samples.push_back({s.label, std::move(seq)});
  }
  write_frame_cache(dir / "order.dfrm", cache);
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"architecture": {"input": [1, 1, 8], "layers": "8-3"},
               "regime": {"q": 0.5},
               "preprocessing": {"nu": 2},
               "training": {"batch_size": 8, "epochs": 2, "seed": 4, "learning_rate": 0.01},
               "data": {"format": "frames", "train": ")"
        << (dir / "order.dfrm").string() << R"(", "test": ")"
        << (dir / "order.dfrm").string() << R"("},
               "output_dir": ")" << (dir / "run").string() << R"("})";
  }
  const std::string config = "--config " + (dir / "run.json").string();
  std::string out;
  REQUIRE(run("train " + config, &out) == 0);
  CHECK(fs::exists(dir / "run" / "best.denn"));
  CHECK(fs::exists(dir / "run" / "last.denn"));
  const std::string metrics = slurp(dir / "run" / "metrics.csv");
  CHECK(metrics.rfind("epoch,split,loss,accuracy,skipped_samples\n", 0) == 0);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 5);

  // Same seed, same metrics.
  const fs::path again = dir / "again";
  REQUIRE(run("train " + config + " --output-dir " + again.string()) == 0);
  CHECK(slurp(again / "metrics.csv") == metrics);

  const std::string ck = "--checkpoint " + (dir / "run" / "best.denn").string();
  CHECK(run("eval " + ck + " --max-frames 4 --out " + (dir / "sweep.csv").string(), &out) == 0);
  const std::string sweep = slurp(dir / "sweep.csv");
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 5);
  CHECK(run("eval " + ck + " --max-frames 0", &out) == 2);
  CHECK(run("eval " + ck + " " + config + " --q 1", &out) == 2);
  CHECK(out.find("hash") != std::string::npos);

  CHECK(run("diagnose " + ck + " --out " + (dir / "diag").string(), &out) == 0);
  for (const char* f : {"posterior_trace.csv", "delta_maps.csv", "spike_time_histograms.csv",
                        "skewness.csv", "synaptic_impact.csv", "activity_curve.csv"}) {
    CHECK(fs::exists(dir / "diag" / f));
  }
  CHECK(run("energy " + ck + " --out " + (dir / "energy").string(), &out) == 0);
  CHECK(fs::exists(dir / "energy" / "energy.csv"));
  CHECK(fs::exists(dir / "energy" / "complexity.csv"));
}
