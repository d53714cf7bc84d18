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
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dermnet/checkpoint.hpp"
#include "dermnet/metrics.hpp"
#include "dermnet/pipeline.hpp"
#include "dermnet/train.hpp"

namespace derm::eval {

/// Inference-mode probabilities in sample order.
std::vector<double> score(const nn::ModelSpec& spec, const nn::Parameters& params, std::span<const Sample> samples,
                          std::size_t batch_size = 256);

struct Evaluation {
  std::string split;
  std::vector<std::string> image_ids;
  std::vector<double> scores;
  std::vector<int> labels;
  ConfusionMatrix confusion;
  MetricsReport metrics;
  std::optional<RocCurve> roc;  // empty when only one class is present
  bool operator==(const Evaluation&) const = default;
};

Evaluation evaluate(const nn::ModelSpec& spec, const nn::Parameters& params, std::span<const Sample> samples,
                    std::string split_name = "test", double threshold = 0.5);
Evaluation evaluate(const nn::Checkpoint& ckpt, std::span<const Sample> samples, std::string split_name = "test",
                    double threshold = 0.5);

/// Table with Precision / Recall / F1 / Training Acc / Testing Acc columns,
/// followed by metric=value lines.
std::string format_report(const Evaluation& e, std::optional<double> train_accuracy = std::nullopt);

/// image_id,label,score
std::string scores_csv(const Evaluation& e);

/// Runs one untimed-for-stats warmup epoch, then times n_epochs full epochs.
TimingReport benchmark_epoch(const nn::ModelSpec& spec, const train::TrainConfig& cfg, std::span<const Sample> train,
                             std::size_t n_epochs, std::string hardware_note = {});

std::string format_timing(const TimingReport& t);

}  // namespace derm::eval
