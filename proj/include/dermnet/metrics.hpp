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

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace derm::eval {

struct ConfusionMatrix {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

enum DegenerateFlag : unsigned {
  PrecisionUndefined = 1u << 0,
  RecallUndefined = 1u << 1,
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  unsigned flags = 0;

  bool has(DegenerateFlag f) const noexcept { return (flags & f) != 0; }
  bool operator==(const MetricsReport&) const = default;
};

MetricsReport metrics(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;  // first point has threshold +inf
  double auc = 0.0;
  bool operator==(const RocCurve&) const = default;
};

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of positive/negative pairs ordered correctly, ties count half.
double auc_mann_whitney(std::span<const double> scores, std::span<const int> labels);

/// threshold,fpr,tpr
std::string roc_csv(const RocCurve& roc);

struct TimingReport {
  std::vector<double> seconds_per_epoch;
  double warmup_seconds = 0.0;
  double total_minutes = 0.0;
  std::size_t train_size = 0;
  std::string hardware_note;
};

}  // namespace derm::eval
