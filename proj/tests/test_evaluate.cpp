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

#include "dermnet/evaluate.hpp"
#include "dermnet/fixture.hpp"
#include "helpers.hpp"

using namespace derm;
using namespace derm::eval;

namespace {

nn::ModelSpec small_spec() { return nn::default_spec(8, 8, 3); }

}  // namespace

TEST_CASE("evaluation is consistent with its parts") {
  const auto samples = fixture::make_samples(5, 7, 8, 2);
  const nn::Parameters params = nn::init_params(small_spec(), 3);
  const Evaluation e = evaluate(small_spec(), params, samples, "val", 0.5);
  CHECK(e.split == "val");
  REQUIRE(e.scores.size() == 12);
  CHECK(e.image_ids[0] == "syn_00000");
  CHECK(e.labels[0] == 1);
  CHECK(e.labels[11] == 0);
  CHECK(e.confusion == confusion(e.scores, e.labels, 0.5));
  CHECK(e.metrics == metrics(e.confusion));
  REQUIRE(e.roc.has_value());
  CHECK(e.roc->auc == doctest::Approx(auc_mann_whitney(e.scores, e.labels)));
  CHECK(score(small_spec(), params, samples, 5) == e.scores);
  CHECK(evaluate(small_spec(), params, samples, "val", 0.5) == e);

  nn::Checkpoint ckpt;
  ckpt.spec = small_spec();
  ckpt.params = params;
  CHECK(evaluate(ckpt, samples, "val", 0.5) == e);
}

TEST_CASE("single-class splits have no AUC") {
  const auto samples = fixture::make_samples(0, 4, 8, 2);
  const Evaluation e = evaluate(small_spec(), nn::init_params(small_spec(), 1), samples);
  CHECK_FALSE(e.roc.has_value());
  const std::string report = format_report(e);
  CHECK(report.find("auc=n/a") != std::string::npos);
  CHECK(report.find("flag=RecallUndefined") != std::string::npos);
  CHECK_ERROR(evaluate(small_spec(), nn::init_params(small_spec(), 1), std::vector<Sample>{}), ErrorCode::EmptySplit);
}

TEST_CASE("report layout") {
  Evaluation e;
  e.split = "test";
  e.confusion = {3, 5, 1, 1};
  e.metrics = metrics(e.confusion);
  e.roc = RocCurve{{}, 0.9};
  const std::string report = format_report(e, 0.95);
  CHECK(report.find("Model | Precision | Recall | F1 score | Training Acc | Testing Acc | AUC") != std::string::npos);
  CHECK(report.find("| 75.00 | 75.00 | 75.00 | 95.00 | 80.00 | 0.9") != std::string::npos);
  CHECK(report.find("tp=3\ntn=5\nfp=1\nfn=1\n") != std::string::npos);
  CHECK(report.find("accuracy=0.8\n") != std::string::npos);
  CHECK(report.find("train_accuracy=0.95\n") != std::string::npos);
  CHECK(report.find("flag=") == std::string::npos);

  e.image_ids = {"a", "b"};
  e.labels = {1, 0};
  e.scores = {0.25, 0.5};
  CHECK(scores_csv(e) == "image_id,label,score\na,1,0.25\nb,0,0.5\n");
}

TEST_CASE("benchmark structure") {
  train::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.balance = false;
  const auto samples = fixture::make_samples(6, 10, 8, 4);
  const TimingReport t = benchmark_epoch(small_spec(), cfg, samples, 2, "test box");
  CHECK(t.seconds_per_epoch.size() == 2);
  CHECK(t.train_size == 16);
  CHECK(t.warmup_seconds > 0.0);
  double sum = t.warmup_seconds;
  for (double s : t.seconds_per_epoch) {
    CHECK(s > 0.0);
    sum += s;
  }
  CHECK(t.total_minutes * 60.0 >= sum * 0.999);
  const std::string text = format_timing(t);
  CHECK(text.find("epoch_2_seconds=") != std::string::npos);
  CHECK(text.find("hardware=test box\n") != std::string::npos);
  CHECK_ERROR(benchmark_epoch(small_spec(), cfg, samples, 0), ErrorCode::InvalidArgument);
}
