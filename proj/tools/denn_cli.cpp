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

// denn: preprocess | train | eval | gradcheck | energy | diagnose

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "denn/checkpoint.hpp"
#include "denn/config.hpp"
#include "denn/data.hpp"
#include "denn/diagnostics.hpp"
#include "denn/energy.hpp"
#include "denn/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace denn;

namespace {

// Flags that override RunConfig keys. Unset options leave the config alone.
struct Overrides {
  std::string config;
  std::string preset;
  std::optional<std::string> layers;
  std::optional<std::string> kernel;
  std::optional<double> q;
  std::optional<int> nu;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<int> epochs;
  std::optional<std::string> scheduler;
  std::optional<std::uint32_t> seed;
  std::optional<int> threads;
  std::optional<double> r;
  std::optional<int> delta;
  std::optional<std::string> format;
  std::optional<std::string> train, train_labels, test, test_labels;
  std::optional<std::size_t> train_limit, test_limit;
  std::optional<std::string> output_dir;

  void add(CLI::App* app, bool with_training = true) {
    app->add_option("--config", config, "JSON run config");
    app->add_option("--preset", preset,
                    "mnist | cifar10 | nmnist | dvs-gesture | gsc");
    app->add_option("--layers", layers, "layer string, e.g. 100-10");
    app->add_option("--kernel", kernel, "exponential | inverse");
    app->add_option("--q", q, "inhibition quantile");
    app->add_option("--nu", nu, "long-term memory length");
    if (with_training) {
      app->add_option("--lr", learning_rate);
      app->add_option("--batch-size", batch_size);
      app->add_option("--epochs", epochs);
      app->add_option("--scheduler", scheduler, "none | cosine");
      app->add_option("--seed", seed);
    }
    app->add_option("--threads", threads);
    app->add_option("--r", r, "event2time trigger fraction");
    app->add_option("--delta", delta);
    app->add_option("--format", format, "idx | nmnist | devt | frames");
    app->add_option("--train", train);
    app->add_option("--train-labels", train_labels);
    app->add_option("--test", test);
    app->add_option("--test-labels", test_labels);
    app->add_option("--train-limit", train_limit);
    app->add_option("--test-limit", test_limit);
    app->add_option("--output-dir", output_dir);
  }

  bool any_model_key() const {
    return !config.empty() || !preset.empty() || layers || kernel || q || nu;
  }

  RunConfig resolve(const RunConfig* base = nullptr) const {
    RunConfig c;
    if (!config.empty()) {
      c = load_config(config);
    } else if (!preset.empty()) {
      c = preset_config(preset);
    } else if (base) {
      c = *base;
    } else {
      throw ConfigError("give --config or --preset");
    }
    if (layers) c.network.layers = NetworkSpec::parse(c.network.input, *layers).layers;
    if (kernel) c.network.kernel = parse_kernel(*kernel);
    if (q) c.network.q = *q;
    if (nu) c.network.nu = *nu;
    if (learning_rate) c.training.learning_rate = *learning_rate;
    if (batch_size) c.training.batch_size = *batch_size;
    if (epochs) c.training.epochs = *epochs;
    if (scheduler) c.training.scheduler = parse_scheduler(*scheduler);
    if (seed) c.training.seed = *seed;
    if (threads) c.training.threads = *threads;
    if (r) c.preprocessing.r = *r;
    if (delta) c.preprocessing.delta = *delta;
    if (format) c.data.format = parse_data_format(*format);
    if (train) c.data.train = *train;
    if (train_labels) c.data.train_labels = *train_labels;
    if (test) c.data.test = *test;
    if (test_labels) c.data.test_labels = *test_labels;
    if (train_limit) c.data.train_limit = *train_limit;
    if (test_limit) c.data.test_limit = *test_limit;
    if (output_dir) c.output_dir = *output_dir;
    validate(c);
    return c;
  }
};

void report(const LoadStats& st, const char* split) {
  for (const auto& w : st.warnings) std::cerr << "warning: " << w << '\n';
  std::printf("%s: %zu samples, %zu skipped, %.2f frames/sample", split,
              st.samples, st.skipped,
              st.samples ? static_cast<double>(st.frames) / st.samples : 0.0);
  if (st.mean_span_us > 0) std::printf(", mean frame span %.1f us", st.mean_span_us);
  if (st.dropped_frames) std::printf(", %llu flat frames dropped",
                                     static_cast<unsigned long long>(st.dropped_frames));
  std::printf("\n");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.precision(10);
  return os;
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const Overrides& o, const std::string& out) {
  RunConfig c = o.resolve();
  const fs::path dir = out.empty() ? fs::path(c.output_dir) : fs::path(out);
  for (Split split : {Split::kTrain, Split::kTest}) {
    const std::string& path = split == Split::kTrain ? c.data.train : c.data.test;
    if (path.empty()) continue;
    LoadStats st;
    FrameCache cache = preprocess_split(c, split, &st);
    const char* name = split == Split::kTrain ? "train" : "test";
    const fs::path file = dir / (std::string(name) + ".dfrm");
    write_frame_cache(file, cache);
    report(st, name);
    std::printf("wrote %s\n", file.string().c_str());
  }
  return 0;
}

int cmd_train(const Overrides& o, const std::string& resume) {
  RunConfig c = o.resolve();
  LoadStats st_train, st_test;
  const Dataset train_set = load_split(c, Split::kTrain, &st_train);
  report(st_train, "train");
  Dataset test_set;
  if (!c.data.test.empty()) {
    test_set = load_split(c, Split::kTest, &st_test);
    report(st_test, "test");
  }
  Network net(c.network, c.training.seed);
  TrainerState state = make_trainer_state(net, c.training);
  if (!resume.empty()) {
    LoadedCheckpoint ck = load_checkpoint(resume, &c);
    if (!ck.state) throw ConfigError(resume + " holds no optimizer state");
    net = std::move(ck.net);
    state = std::move(*ck.state);
  }
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  {
    auto cfg = open_out(dir / "config.json");
    cfg << config_to_json(c) << '\n';
  }
  auto metrics = open_out(dir / "metrics.csv");
  write_metrics_header(metrics);
  std::printf("%s: %lld delay parameters, %d threads\n",
              c.network.layers_string().c_str(),
              static_cast<long long>(net.parameter_count()),
              resolve_threads(c.training.threads));
  double best = -1;
  const auto t0 = std::chrono::steady_clock::now();
  train(net, train_set, test_set, c.training, state, [&](const EpochRecord& r) {
    write_metrics(metrics, r);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0).count();
    std::printf("epoch %d lr %.3g train loss %.4f acc %.4f", r.epoch,
                r.learning_rate, r.train.loss, r.train.accuracy);
    if (r.test.count) {
      std::printf(" | test loss %.4f acc %.4f", r.test.loss, r.test.accuracy);
    }
    std::printf(" | skipped %zu | %.0fs\n", r.train.skipped, secs);
    std::fflush(stdout);
    const double score = r.test.count ? r.test.accuracy : r.train.accuracy;
    save_checkpoint(dir / "last.denn", net, c, &state);
    if (score > best) {
      best = score;
      save_checkpoint(dir / "best.denn", net, c, &state);
    }
  });
  std::printf("best accuracy %.4f, checkpoints in %s\n", best, dir.string().c_str());
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& checkpoint,
             std::optional<int> max_frames, const std::string& out) {
  if (max_frames && *max_frames < 1) {
    throw ConfigError("--max-frames needs at least 1 frame");
  }
  LoadedCheckpoint ck = [&] {
    if (o.any_model_key()) {
      RunConfig expected = o.resolve();
      return load_checkpoint(checkpoint, &expected);
    }
    return load_checkpoint(checkpoint);
  }();
  RunConfig c = o.resolve(&ck.config);
  LoadStats st;
  const Dataset data = load_split(c, Split::kTest, &st);
  report(st, "test");
  const auto t0 = std::chrono::steady_clock::now();
  const EvalResult full = evaluate(ck.net, data, c.training.threads);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("accuracy %.4f (%zu/%zu), loss %.4f, skipped %zu\n", full.accuracy,
              full.correct, full.count, full.loss, full.skipped);
  std::printf("inference %.3f ms/sample wall clock\n",
              data.size() ? 1000.0 * secs / static_cast<double>(data.size()) : 0.0);
  if (max_frames) {
    const fs::path file = out.empty() ? fs::path(c.output_dir) / "accuracy_vs_frames.csv"
                                      : fs::path(out);
    auto os = open_out(file);
    os << "max_frames,accuracy,loss\n";
    for (int k = 1; k <= *max_frames; ++k) {
      const EvalResult r = evaluate(ck.net, data, c.training.threads, k);
      os << k << ',' << r.accuracy << ',' << r.loss << '\n';
      std::printf("  first %d frames: accuracy %.4f\n", k, r.accuracy);
    }
    std::printf("wrote %s\n", file.string().c_str());
  }
  return 0;
}

int cmd_gradcheck(int cases, std::uint32_t seed, const std::string& kernel,
                  std::optional<double> q, std::optional<int> nu,
                  const std::string& layout, double tolerance, bool verbose) {
  CaseFilter filter;
  if (kernel != "all") filter.kernel = parse_kernel(kernel).kind;
  filter.q = q;
  filter.nu = nu;
  if (layout == "dense") filter.conv = false;
  if (layout == "conv") filter.conv = true;
  const SuiteReport suite = run_gradcheck_suite(cases, seed, filter);
  for (const auto& [name, r] : suite.cases) {
    if (!verbose && r.max_rel_error <= tolerance) continue;
    std::printf("%-48s max rel %.3e  (%s analytic %.6g numeric %.6g)\n",
                name.c_str(), r.max_rel_error, r.worst.c_str(), r.worst_analytic,
                r.worst_numeric);
  }
  const bool ok = suite.max_rel_error <= tolerance &&
                  suite.cases.size() == static_cast<std::size_t>(cases);
  std::printf("%zu/%d networks, %zu gradients checked, %zu probes on a kink "
              "skipped, max relative error %.3e: %s\n",
              suite.cases.size(), cases, suite.checked, suite.rejected,
              suite.max_rel_error, ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

int cmd_energy(const Overrides& o, const std::string& checkpoint,
               std::optional<std::uint64_t> counts, const std::string& out) {
  OpCounts total;
  if (counts) {
    // mnist-q1 / mnist-q05 name the two published MNIST rows; the formula
    // only needs the architecture.
    std::string preset = o.preset.empty() ? "mnist" : o.preset;
    if (preset.rfind("mnist-q", 0) == 0) preset = "mnist";
    Overrides p = o;
    p.preset = preset;
    total = counts_from_total(p.resolve().network, *counts);
  } else {
    if (checkpoint.empty()) throw ConfigError("give --checkpoint or --counts");
    LoadedCheckpoint ck = load_checkpoint(checkpoint);
    RunConfig c = o.resolve(&ck.config);
    const Dataset data = load_split(c, Split::kTest);
    ForwardTape tape;
    for (const auto& s : data.samples) {
      try {
        ck.net.forward(s.frames, &tape);
      } catch (const DegenerateLayerError&) {
        continue;
      }
      total += count_active(ck.net, tape);
    }
    std::printf("%llu samples, %.1f active synapses per sample\n",
                static_cast<unsigned long long>(total.samples),
                total.samples ? static_cast<double>(total.active()) / total.samples : 0.0);
  }
  const auto rows = energy_report(total);
  for (const auto& r : rows) {
    std::printf("%-10s active %10llu  cycles %14.0f  %10.3f uJ\n", r.layer.c_str(),
                static_cast<unsigned long long>(r.active), r.cycles, r.joules * 1e6);
  }
  if (!out.empty()) {
    auto os = open_out(fs::path(out) / "energy.csv");
    write_energy_csv(os, rows);
    auto cs = open_out(fs::path(out) / "complexity.csv");
    write_complexity_csv(cs, complexity_report(total));
  }
  return 0;
}

int cmd_diagnose(const Overrides& o, const std::string& checkpoint, int sample,
                 int bins, const std::string& out) {
  LoadedCheckpoint ck = load_checkpoint(checkpoint);
  RunConfig c = o.resolve(&ck.config);
  const Dataset data = load_split(c, Split::kTest);
  if (data.size() == 0) throw ConfigError("test split is empty");
  if (sample < 0 || static_cast<std::size_t>(sample) >= data.size()) {
    throw ConfigError("--sample out of range");
  }
  const fs::path dir = out.empty() ? fs::path(c.output_dir) / "diagnostics" : fs::path(out);
  const Matrix& frames = data.samples[static_cast<std::size_t>(sample)].frames;
  {
    auto os = open_out(dir / "posterior_trace.csv");
    write_posterior_csv(os, posterior_trace(ck.net, frames));
  }
  {
    auto os = open_out(dir / "delta_maps.csv");
    write_delta_csv(os, delta_maps(ck.net, frames));
  }
  {
    auto os = open_out(dir / "spike_time_histograms.csv");
    write_histogram_csv(os, spike_time_histograms(ck.net, data, bins));
  }
  if (ck.net.stages().size() > 1) {
    const Matrix skew = class_skewness(ck.net, data, 0);
    auto os = open_out(dir / "skewness.csv");
    write_skewness_csv(os, skew);
    double mean_abs = 0;
    int classes = 0;
    for (Index k = 0; k < skew.rows(); ++k) {
      if (skew(k, 1) > 0) {
        mean_abs += std::abs(skew(k, 0));
        ++classes;
      }
    }
    if (classes) {
      std::printf("first delay layer: mean |skewness| over classes %.3f\n",
                  mean_abs / classes);
    }
  }
  if (std::holds_alternative<DenseDelayLayer>(ck.net.stages().back().layer)) {
    auto os = open_out(dir / "synaptic_impact.csv");
    write_impact_csv(os, synaptic_impact(ck.net, data));
  }
  {
    auto os = open_out(dir / "activity_curve.csv");
    write_activity_csv(os, activity_curve(c.network.kernel, 0.0, 1.0, 3.0, 601));
  }
  std::printf("wrote diagnostics to %s\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay neural networks: training, evaluation and audits"};
  app.require_subcommand(1);

  Overrides pre_o, train_o, eval_o, energy_o, diag_o;
  std::string pre_out, resume, checkpoint, eval_out, energy_out, diag_out;
  std::optional<int> max_frames;
  int sample = 0, bins = 60;

  auto* pre = app.add_subcommand("preprocess", "event streams to a frame cache");
  pre_o.add(pre, false);
  pre->add_option("--out", pre_out, "directory for train.dfrm / test.dfrm");

  auto* tr = app.add_subcommand("train", "train and checkpoint");
  train_o.add(tr);
  tr->add_option("--resume", resume, "continue from a checkpoint");

  auto* ev = app.add_subcommand("eval", "test accuracy of a checkpoint");
  eval_o.add(ev, false);
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--max-frames", max_frames,
                 "also sweep accuracy using only the first k = 1..N frames");
  ev->add_option("--out", eval_out, "CSV for the frame sweep");

  int cases = 50;
  std::uint32_t gc_seed = 1;
  std::string gc_kernel = "all", gc_layout = "all";
  std::optional<double> gc_q;
  std::optional<int> gc_nu;
  double tolerance = 1e-6;
  bool verbose = false;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gc->add_option("--cases", cases);
  gc->add_option("--seed", gc_seed);
  gc->add_option("--kernel", gc_kernel, "all | exponential | inverse");
  gc->add_option("--q", gc_q);
  gc->add_option("--nu", gc_nu);
  gc->add_option("--layout", gc_layout, "all | dense | conv");
  gc->add_option("--tolerance", tolerance);
  gc->add_flag("-v,--verbose", verbose);

  std::optional<std::uint64_t> counts;
  auto* en = app.add_subcommand("energy", "SpiNNaker energy and complexity");
  energy_o.add(en, false);
  en->add_option("--checkpoint", checkpoint);
  en->add_option("--counts", counts, "active synapses per sample (skips data)");
  en->add_option("--out", energy_out, "directory for energy.csv / complexity.csv");

  auto* dg = app.add_subcommand("diagnose", "CSV diagnostics of a checkpoint");
  diag_o.add(dg, false);
  dg->add_option("--checkpoint", checkpoint)->required();
  dg->add_option("--sample", sample, "test sample for the per-sample traces");
  dg->add_option("--bins", bins);
  dg->add_option("--out", diag_out);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*pre) return cmd_preprocess(pre_o, pre_out);
    if (*tr) return cmd_train(train_o, resume);
    if (*ev) return cmd_eval(eval_o, checkpoint, max_frames, eval_out);
    if (*gc) {
      return cmd_gradcheck(cases, gc_seed, gc_kernel, gc_q, gc_nu, gc_layout,
                           tolerance, verbose);
    }
    if (*en) return cmd_energy(energy_o, checkpoint, counts, energy_out);
    if (*dg) return cmd_diagnose(diag_o, checkpoint, sample, bins, diag_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
