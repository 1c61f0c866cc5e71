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
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "denn/events.hpp"
#include "denn/network.hpp"
#include "denn/training.hpp"

using namespace denn;

namespace {

constexpr double kInf = kSilent<double>;

Dataset toy_dataset(std::size_t n, Index frames, Index features, int classes,
                    std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  Dataset d;
  d.shape = {1, 1, static_cast<int>(features)};
  d.classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix x(frames, features);
    for (Index k = 0; k < x.size(); ++k) x.data()[k] = normal(rng);
    d.samples.push_back({standardize_frames(x), static_cast<int>(i % classes)});
  }
  return d;
}

std::vector<double> flatten(Network& net) {
  std::vector<double> out;
  for (const auto& p : net.parameters()) out.insert(out.end(), p.values.begin(), p.values.end());
  return out;
}

}  // namespace

TEST_CASE("temporal softmin") {
  Matrix z(1, 2);
  z << 0, 0;
  CHECK(temporal_softmin(z)(0) == 0.5);
  z << 0, kInf;
  CHECK(temporal_softmin(z)(0) == 1.0);
  CHECK(temporal_softmin(z)(1) == 0.0);

  Matrix two(2, 2);
  two << 0, 1, 1, 0;
  CHECK(temporal_softmin(two)(0) == doctest::Approx(0.5).epsilon(1e-15));

  Matrix silent = Matrix::Constant(3, 4, kInf);
  CHECK_THROWS_AS(temporal_softmin(silent), DegeneratePosteriorError);
}

TEST_CASE("posterior normalization and shift invariance") {
  std::mt19937 rng(1);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int n = 0; n < 500; ++n) {
    Matrix z(1 + n % 7, 2 + n % 9);
    for (Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
    const VectorXd pi = temporal_softmin(z);
    CHECK(std::abs(pi.sum() - 1) <= 1e-12);
    CHECK(pi.minCoeff() > 0);
    const Matrix shifted = (z.array() + 4.5).matrix();
    CHECK((temporal_softmin(shifted) - pi).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // Shifting a single frame changes its weight.
  Matrix z(2, 2);
  z << 0, 1, 1, 0;
  Matrix frame_shift = z;
  frame_shift.row(0).array() += 1.0;
  CHECK(std::abs(temporal_softmin(frame_shift)(0) - 0.5) > 0.1);
}

TEST_CASE("cross entropy") {
  Matrix z(1, 2);
  z << 0, kInf;
  CHECK(cross_entropy(z, 0).loss == 0.0);
  z << 0, 0;
  CHECK(cross_entropy(z, 0).loss == doctest::Approx(std::numbers::ln2));

  Matrix y(2, 3);
  y << 0.3, -0.2, 1.1, -0.7, 0.4, 0.05;
  const LossResult r = cross_entropy(y, 2);
  CHECK(r.loss == doctest::Approx(1.5300322135677669).epsilon(1e-15));
  const double h = 1e-6;
  for (Index i = 0; i < y.size(); ++i) {
    Matrix p = y, m = y;
    p.data()[i] += h;
    m.data()[i] -= h;
    const double numeric = (cross_entropy(p, 2).loss - cross_entropy(m, 2).loss) / (2 * h);
    CHECK(r.grad.data()[i] == doctest::Approx(numeric).epsilon(1e-6));
  }
  CHECK_THROWS_AS(cross_entropy(y, 3), ShapeError);

  // The target posterior underflows the floor.
  Matrix far(1, 2);
  far << 0, 800;
  const LossResult c = cross_entropy(far, 1);
  CHECK(c.clipped);
  CHECK(c.loss == doctest::Approx(-std::log(kPosteriorFloor)));
  CHECK(c.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frobenius normalization") {
  std::vector<double> zero(4, 0.0);
  frobenius_normalize(std::span<double>(zero));
  CHECK(zero == std::vector<double>(4, 0.0));

  std::vector<double> big{6, 8};
  frobenius_normalize(std::span<double>(big));
  CHECK(big[0] == doctest::Approx(0.6));
  CHECK(big[1] == doctest::Approx(0.8));

  std::vector<double> small{0.3, 0.4};
  frobenius_normalize(std::span<double>(small));
  CHECK(small == std::vector<double>{0.3, 0.4});

  // Per tensor, direction kept.
  std::vector<double> a{3, 4, 0}, b{0.1, 0.2};
  std::vector<std::span<double>> both{a, b};
  frobenius_normalize(std::span<const std::span<double>>(both));
  CHECK(std::hypot(a[0], a[1]) == doctest::Approx(1.0));
  CHECK(a[0] / a[1] == doctest::Approx(0.75));
  CHECK(b[1] == 0.2);
}

TEST_CASE("adam") {
  std::vector<double> x{1.0, -2.0, 0.5}, g(3, 0.0);
  std::vector<ParamView> params{{"x", ParamKind::kSignedDelay, 0, x}};
  std::vector<ParamView> grads{{"x", ParamKind::kSignedDelay, 0, g}};
  Adam adam(params);
  adam.step(params, grads, 1e-3);
  CHECK(x == std::vector<double>{1.0, -2.0, 0.5});

  g = {0.7, -3.0, 1e-3};
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> before = x;
    adam.step(params, grads, 1e-3);
    if (i == 999) {
      CHECK(before[0] - x[0] == doctest::Approx(1e-3).epsilon(1e-3));
      CHECK(before[1] - x[1] == doctest::Approx(-1e-3).epsilon(1e-3));
      CHECK(before[2] - x[2] == doctest::Approx(1e-3).epsilon(1e-3));
    }
  }
  CHECK(adam.steps() == 1001);

  std::vector<double> s{2e-3}, gs{1.0};
  std::vector<ParamView> sp{{"sigma", ParamKind::kSigma, 0, s}};
  std::vector<ParamView> sg{{"sigma", ParamKind::kSigma, 0, gs}};
  Adam sa(sp);
  sa.step(sp, sg, 0.5);
  CHECK(s[0] == kSigmaFloor);
}

TEST_CASE("cosine schedule") {
  CHECK(scheduled_rate(Scheduler::kNone, 1e-3, 7, 10) == 1e-3);
  CHECK(scheduled_rate(Scheduler::kCosineAnnealing, 1e-3, 0, 10) == 1e-3);
  CHECK(scheduled_rate(Scheduler::kCosineAnnealing, 1e-3, 5, 10) ==
        doctest::Approx(5e-4));
  for (int e = 1; e < 10; ++e) {
    const double r = scheduled_rate(Scheduler::kCosineAnnealing, 1.0, e, 10);
    CHECK(r < scheduled_rate(Scheduler::kCosineAnnealing, 1.0, e - 1, 10));
    CHECK(r > 0);
  }
}

TEST_CASE("training is deterministic") {
  const Dataset data = toy_dataset(10, 3, 8, 3, 5);
  TrainConfig config;
  config.batch_size = 4;
  config.epochs = 2;
  config.seed = 17;
  config.learning_rate = 0.01;
  auto run = [&](int threads) {
    TrainConfig c = config;
    c.threads = threads;
    Network net(NetworkSpec::parse(data.shape, "6-3"), 3);
    TrainerState state = make_trainer_state(net, c);
    std::ostringstream log;
    write_metrics_header(log);
    train(net, data, data, c, state, [&](const EpochRecord& r) { write_metrics(log, r); });
    return std::make_pair(flatten(net), log.str());
  };
  const auto a = run(1), b = run(1), c = run(3);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first == c.first);
  CHECK(a.second.rfind("epoch,split,loss,accuracy,skipped_samples\n0,train,", 0) == 0);
}

TEST_CASE("degenerate samples are skipped") {
  Dataset data = toy_dataset(6, 2, 8, 3, 9);
  data.samples[2].frames.setConstant(kInf);
  Network net(NetworkSpec::parse(data.shape, "6-3"), 3);
  const EvalResult r = evaluate(net, data, 1);
  CHECK(r.skipped == 1);
  CHECK(r.count == 6);
  TrainConfig config;
  config.batch_size = 3;
  TrainerState state = make_trainer_state(net, config);
  const EvalResult t = train_epoch(net, data, config, state);
  CHECK(t.skipped == 1);
  CHECK(std::isfinite(t.loss));
}

TEST_CASE("frame truncation") {
  const Dataset data = toy_dataset(12, 4, 8, 3, 2);
  Network net(NetworkSpec::parse(data.shape, "6-3"), 4);
  const EvalResult all = evaluate(net, data, 1);
  const EvalResult k4 = evaluate(net, data, 1, 4);
  CHECK(all.accuracy == k4.accuracy);
  CHECK(all.loss == k4.loss);
  const Matrix first = data.samples[0].frames.topRows(1);
  CHECK(predict(net, data.samples[0].frames, 1) == predict(net, first));
}

TEST_CASE("mnist subset loss decreases") {
  const std::filesystem::path root = std::filesystem::path(DENN_DATA_DIR) / "mnist";
  const auto images = root / "train-images-idx3-ubyte";
  if (!std::filesystem::exists(images)) {
    MESSAGE("MNIST not found under " << root.string() << ", skipped");
    return;
  }
  const IdxImages im = read_idx_images(images, 512);
  const auto labels = read_idx_labels(root / "train-labels-idx1-ubyte", 512);
  REQUIRE(im.pixels.rows() == 512);
  Dataset data;
  data.shape = im.shape;
  data.classes = 10;
  for (Index i = 0; i < im.pixels.rows(); ++i) {
    data.samples.push_back(
        {encode_static_image(im.pixels.row(i).transpose(), true),
         labels[static_cast<std::size_t>(i)]});
  }
  Network net(architecture_preset("mnist"), 22756400);
  TrainConfig config;
  config.batch_size = 32;
  config.epochs = 5;
  config.seed = 22756400;
  TrainerState state = make_trainer_state(net, config);
  double previous = 1e9;
  train(net, data, {}, config, state, [&](const EpochRecord& r) {
    CHECK(r.train.loss < previous);
    previous = r.train.loss;
  });
}
