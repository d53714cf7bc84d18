/**
 * Copyright 2026 The dermnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <set>

#include "dermnet/fixture.hpp"
#include "dermnet/parallel.hpp"
#include "dermnet/train.hpp"
#include "helpers.hpp"

using namespace derm;
using namespace derm::train;

namespace {

nn::ModelSpec tiny_spec() {
  return nn::parse_model_spec(
      "input h=8 w=8 c=3\nconv2d out=4 k=3 stride=1 pad=1\nrelu\nmaxpool size=2 stride=2\nflatten\n"
      "dense units=8\nrelu\ndropout rate=0.5\ndense units=1\nsigmoid\n");
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  cfg.val_every_iters = 2;
  cfg.seed = 11;
  cfg.optimizer.lr = 0.01;
  cfg.balance = false;
  return cfg;
}

TrainData tiny_data(std::size_t n_pos = 6, std::size_t n_neg = 6) {
  return {fixture::make_samples(n_pos, n_neg, 8, 3), fixture::make_samples(2, 2, 8, 3, 1000)};
}

bool params_finite(const nn::Parameters& p) {
  for (const auto& l : p) {
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

ValidationPoint point(double loss, double train_loss) {
  ValidationPoint v;
  v.loss = loss;
  v.train_loss = train_loss;
  return v;
}

}  // namespace

TEST_CASE("config parses every key and round-trips through format") {
  const std::string text =
      "# comment\n"
      "batch_size = 16\nepochs=7\nval_every_iters=5\nseed=42\nlr=0.002\nbeta1=0.8\nbeta2=0.99\neps=1e-7\n"
      "balance=false\npca_sigma=0.2\nspec_path=model.txt\nmanifest_path=/abs/manifest.csv\ndata_dir=data\n"
      "output_dir=out\naugment.rotation_range=30\naugment.height_shift_range=0.1\naugment.width_shift_range=0.15\n"
      "augment.shear_range=0.2\naugment.zoom_range=0.25\naugment.channel_shift_range=10\naugment.horizontal_flip=true\n"
      "augment.fill_mode=nearest\npreprocess.t_r1=0.9\npreprocess.t_r2=0.1\npreprocess.mean_window=8\n"
      "preprocess.denoise=gaussian:5:1.5\npreprocess.normalize=zscore\npreprocess.size=32\n";
  const TrainConfig cfg = parse_train_config(text, "/base");
  CHECK(cfg.batch_size == 16);
  CHECK(cfg.epochs == 7);
  CHECK(cfg.val_every_iters == 5);
  CHECK(cfg.seed == 42);
  CHECK(cfg.optimizer.lr == 0.002);
  CHECK(cfg.optimizer.beta1 == 0.8);
  CHECK(cfg.optimizer.eps == 1e-7);
  CHECK_FALSE(cfg.balance);
  CHECK(cfg.spec_path == std::filesystem::path("/base/model.txt"));
  CHECK(cfg.manifest_path == std::filesystem::path("/abs/manifest.csv"));
  CHECK(cfg.output_dir == std::filesystem::path("/base/out"));
  CHECK(cfg.augment.zoom_range == 0.25);
  CHECK(cfg.augment.horizontal_flip);
  CHECK(cfg.preprocess.mean_window == 8);
  CHECK(cfg.preprocess.normalize == preprocess::Normalization::ZScore);
  CHECK(cfg.preprocess.target_height == 32);
  CHECK(cfg.preprocess.target_width == 32);

  const std::string formatted = format_train_config(cfg);
  CHECK(format_train_config(parse_train_config(formatted)) == formatted);
  CHECK(format_train_config(parse_train_config("")) == format_train_config(TrainConfig{}));
}

TEST_CASE("config rejects bad input") {
  CHECK_ERROR(parse_train_config("learning_rate=0.1\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("batch_size=abc\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("batch_size=0\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("lr=-1\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("beta1=1\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("balance=maybe\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("augment.fill_mode=reflect\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("preprocess.denoise=box:3\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_train_config("no equals sign\n"), ErrorCode::InvalidArgument);
}

TEST_CASE("zero epochs returns the initial parameters and an empty log") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  const TrainResult r = run_training(cfg, tiny_spec(), tiny_data());
  CHECK(r.params == nn::init_params(tiny_spec(), cfg.seed));
  CHECK(r.log.iterations.empty());
  CHECK(r.log.validations.empty());
  CHECK(r.log.epochs.empty());
  CHECK(r.iterations == 0);
}

TEST_CASE("iterations per epoch is the ceiling of pool over batch") {
  TrainConfig cfg = tiny_config();
  for (std::size_t batch : {1, 3, 4, 5, 12, 13, 100}) {
    cfg.batch_size = batch;
    Trainer t(cfg, tiny_spec(), tiny_data());
    CHECK(t.iterations_per_epoch() == (12 + batch - 1) / batch);
    t.run_epoch();
    CHECK(t.iteration() == (12 + batch - 1) / batch);
  }
}

TEST_CASE("balancing extends the pool with minority copies") {
  TrainConfig cfg = tiny_config();
  cfg.balance = true;
  cfg.augment.rotation_range = 20;
  cfg.augment.horizontal_flip = true;
  Trainer t(cfg, tiny_spec(), tiny_data(3, 7));
  CHECK(t.pool_size() == 14);
  CHECK(t.iterations_per_epoch() == 4);

  const auto train = fixture::make_samples(3, 7, 8, 3);
  const auto extra = synthesize_balance(train, cfg.augment, cfg.pca_sigma, cfg.seed);
  REQUIRE(extra.size() == 4);
  for (const auto& s : extra) {
    CHECK(s.label == 1);
    CHECK(s.image_id.find("#aug") != std::string::npos);
  }
  CHECK(extra == synthesize_balance(train, cfg.augment, cfg.pca_sigma, cfg.seed));
  CHECK_ERROR(synthesize_balance(fixture::make_samples(0, 4, 8, 3), cfg.augment, 0.1, 1), ErrorCode::EmptyClass);
}

TEST_CASE("validation points land on multiples plus one final point") {
  TrainConfig cfg = tiny_config();
  cfg.val_every_iters = 2;
  cfg.batch_size = 5;  // 3 iterations per epoch
  cfg.epochs = 3;
  const TrainResult r = run_training(cfg, tiny_spec(), tiny_data());
  CHECK(r.iterations == 9);
  std::vector<std::uint64_t> iters;
  for (const auto& v : r.log.validations) iters.push_back(v.iteration);
  CHECK(iters == std::vector<std::uint64_t>{2, 4, 6, 8, 9});
  CHECK(r.log.validations.back().epoch == 3);
  CHECK(r.log.iterations.size() == 9);
  CHECK(r.log.epochs.size() == 3);

  cfg.val_every_iters = 3;
  const TrainResult aligned = run_training(cfg, tiny_spec(), tiny_data());
  iters.clear();
  for (const auto& v : aligned.log.validations) iters.push_back(v.iteration);
  CHECK(iters == std::vector<std::uint64_t>{3, 6, 9});
}

TEST_CASE("training log csv") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  const TrainResult r = run_training(cfg, tiny_spec(), tiny_data());
  const std::string csv = r.log.to_csv(false);
  CHECK(csv.rfind("kind,epoch,iter,loss,acc,seconds\n", 0) == 0);
  CHECK(csv.find("iter,1,1,") != std::string::npos);
  CHECK(csv.find("val,1,2,") != std::string::npos);
  CHECK(csv.find("epoch,1,,") != std::string::npos);
  CHECK(r.log.epochs[0].seconds >= 0.0);
}

TEST_CASE("training is deterministic and independent of thread count") {
  TrainConfig cfg = tiny_config();
  cfg.balance = true;
  set_thread_count(1);
  const TrainResult a = run_training(cfg, tiny_spec(), tiny_data(4, 8));
  set_thread_count(4);
  const TrainResult b = run_training(cfg, tiny_spec(), tiny_data(4, 8));
  set_thread_count(0);
  CHECK(a.params == b.params);
  CHECK(a.log.to_csv(false) == b.log.to_csv(false));
  cfg.seed = 12;
  const TrainResult c = run_training(cfg, tiny_spec(), tiny_data(4, 8));
  CHECK_FALSE(a.params == c.params);
}

TEST_CASE("resuming from a checkpoint matches an uninterrupted run") {
  testing::TempDir dir("resume");
  TrainConfig cfg = tiny_config();
  cfg.epochs = 5;
  cfg.batch_size = 5;
  const TrainResult full = run_training(cfg, tiny_spec(), tiny_data());

  TrainConfig first = cfg;
  first.epochs = 3;
  first.output_dir = dir.path();
  run_training(first, tiny_spec(), tiny_data());
  REQUIRE(std::filesystem::exists(dir.path() / "last.ckpt"));
  REQUIRE(std::filesystem::exists(dir.path() / "best.ckpt"));
  const nn::Checkpoint mid = nn::load_checkpoint(dir.path() / "last.ckpt");
  CHECK(mid.epoch == 3);
  CHECK(mid.iteration == 9);

  TrainConfig second = cfg;
  second.resume_path = dir.path() / "last.ckpt";
  const TrainResult resumed = run_training(second, tiny_spec(), tiny_data());
  CHECK(resumed.epochs_completed == 5);
  CHECK(resumed.iterations == full.iterations);
  CHECK(resumed.params == full.params);
  CHECK(resumed.adam.t == full.adam.t);
  CHECK(resumed.adam.m == full.adam.m);
  CHECK(resumed.adam.v == full.adam.v);
  REQUIRE(resumed.log.iterations.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(resumed.log.iterations[i].iteration == full.log.iterations[9 + i].iteration);
    CHECK(resumed.log.iterations[i].loss == full.log.iterations[9 + i].loss);
  }
}

TEST_CASE("best checkpoint holds the lowest validation loss") {
  testing::TempDir dir("best");
  TrainConfig cfg = tiny_config();
  cfg.output_dir = dir.path();
  const TrainResult r = run_training(cfg, tiny_spec(), tiny_data());
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& v : r.log.validations) lowest = std::min(lowest, v.loss);
  CHECK(r.best_val_loss == lowest);
  const nn::Checkpoint best = nn::load_checkpoint(dir.path() / "best.ckpt");
  CHECK(best.best_val_loss == lowest);
}

TEST_CASE("resume rejects a different architecture") {
  TrainConfig cfg = tiny_config();
  Trainer t(cfg, tiny_spec(), tiny_data());
  nn::Checkpoint other = t.checkpoint();
  other.spec = nn::default_spec(8, 8, 3);
  CHECK_ERROR(t.resume(other), ErrorCode::SpecInvalid);
}

TEST_CASE("non-finite loss stops before any update") {
  TrainConfig cfg = tiny_config();
  TrainData data = tiny_data();
  data.train[0].chw[5] = std::numeric_limits<float>::quiet_NaN();
  cfg.batch_size = 12;
  Trainer t(cfg, tiny_spec(), data);
  const nn::Parameters before = t.params();
  CHECK_ERROR(t.run_epoch(), ErrorCode::NonFiniteLoss);
  CHECK(t.params() == before);
  CHECK(t.iteration() == 0);

  TrainConfig wild = tiny_config();
  wild.optimizer.lr = 1e30;
  wild.epochs = 20;
  bool threw = false;
  try {
    const TrainResult r = run_training(wild, tiny_spec(), tiny_data());
    CHECK(params_finite(r.params));
  } catch (const Error& e) {
    threw = true;
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
  INFO("huge learning rate either diverges loudly or stays finite; threw=" << threw);
}

TEST_CASE("trainer construction errors") {
  TrainConfig cfg = tiny_config();
  TrainData no_train = tiny_data();
  no_train.train.clear();
  CHECK_ERROR(Trainer(cfg, tiny_spec(), no_train), ErrorCode::EmptySplit);
  TrainData no_val = tiny_data();
  no_val.val.clear();
  CHECK_ERROR(Trainer(cfg, tiny_spec(), no_val), ErrorCode::EmptySplit);
  nn::ModelSpec bad = tiny_spec();
  bad.layers.pop_back();
  CHECK_ERROR(Trainer(cfg, bad, tiny_data()), ErrorCode::SpecInvalid);
}

TEST_CASE("training reads only train and validation images") {
  dataset::DatasetManifest m;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "s" + std::to_string(i);
    m.records.push_back({id, "L", i % 2 ? "mel" : "nv", i % 2 ? dataset::Label::Malignant : dataset::Label::Benign, {}});
    m.split_of[id] = i < 14 ? dataset::Split::Train : i < 18 ? dataset::Split::Val : dataset::Split::Test;
  }
  std::set<std::string> seen;
  std::mutex mu;
  const ImageLoader loader = [&](const dataset::SampleRecord& r) {
    std::lock_guard<std::mutex> lock(mu);
    seen.insert(r.image_id);
    return fixture::blob_image(8, r.label == dataset::Label::Malignant, 1, std::stoull(r.image_id.substr(1)));
  };
  TrainData data;
  data.train = load_split(m, dataset::Split::Train, {}, {8, 8, 3}, loader, true);
  data.val = load_split(m, dataset::Split::Val, {}, {8, 8, 3}, loader, true);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  run_training(cfg, tiny_spec(), std::move(data));
  CHECK(seen.size() == 18);
  CHECK(seen.count("s18") == 0);
  CHECK(seen.count("s19") == 0);
}

TEST_CASE("overfit report") {
  TrainLog log;
  CHECK_ERROR(overfit_report(log), ErrorCode::InsufficientLog);
  log.validations.push_back(point(1.0, 1.0));
  CHECK_ERROR(overfit_report(log), ErrorCode::InsufficientLog);

  SUBCASE("monotone decrease") {
    for (int i = 1; i < 15; ++i) log.validations.push_back(point(1.0 - 0.05 * i, 1.0 - 0.05 * i));
    const auto r = overfit_report(log);
    CHECK_FALSE(r.overfitting);
    CHECK(r.longest_rise == 0);
    CHECK(r.best_val_loss == doctest::Approx(0.3));
  }
  SUBCASE("V shape with a short rise") {
    for (int i = 1; i <= 5; ++i) log.validations.push_back(point(1.0 - 0.1 * i, 1.0 - 0.1 * i));
    for (int i = 1; i <= 5; ++i) log.validations.push_back(point(0.5 + 0.1 * i, 0.5 - 0.05 * i));
    log.validations[5].iteration = 50;
    const auto r = overfit_report(log);
    CHECK(r.best_iteration == 50);
    CHECK(r.longest_rise == 5);
    CHECK_FALSE(r.overfitting);
  }
  SUBCASE("long rise with falling training loss") {
    for (int i = 1; i <= 12; ++i) log.validations.push_back(point(1.0 + 0.1 * i, 1.0 - 0.05 * i));
    const auto r = overfit_report(log);
    CHECK(r.longest_rise == 12);
    CHECK(r.overfitting);
  }
  SUBCASE("long rise while training loss also rises") {
    for (int i = 1; i <= 12; ++i) log.validations.push_back(point(1.0 + 0.1 * i, 1.0 + 0.05 * i));
    const auto r = overfit_report(log);
    CHECK(r.longest_rise == 12);
    CHECK_FALSE(r.overfitting);
  }
}
