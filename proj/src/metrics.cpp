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
#include "dermnet/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dermnet/error.hpp"
#include "dermnet/text.hpp"

namespace derm::eval {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorCode::LengthMismatch,
         std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) fail(ErrorCode::Empty, "no samples to score");
  for (int y : labels) {
    if (y != 0 && y != 1) fail(ErrorCode::LabelNotBinary, "label " + std::to_string(y) + " is not 0 or 1");
  }
}

double ratio(std::uint64_t num, std::uint64_t den, unsigned flag, unsigned& flags) {
  if (den == 0) {
    flags |= flag;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? cm.tp : cm.fn) += 1;
    } else {
      (predicted ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail(ErrorCode::EmptyMatrix, "confusion matrix has no samples");
  MetricsReport r;
  r.precision = ratio(cm.tp, cm.tp + cm.fp, PrecisionUndefined, r.flags);
  r.recall = ratio(cm.tp, cm.tp + cm.fn, RecallUndefined, r.flags);
  unsigned unused = 0;
  r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, 0, unused);
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  return r;
}

double auc_mann_whitney(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  // Midranks over the pooled scores.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const std::uint64_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::SingleClass, "AUC needs both classes");
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto pos = static_cast<std::uint64_t>(std::count(labels.begin(), labels.end(), 1));
  const std::uint64_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::SingleClass, "ROC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (labels[order[i]] == 1 ? tp : fp) += 1;
    roc.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
  }
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const RocPoint& a = roc.points[i - 1];
    const RocPoint& b = roc.points[i];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  assert(std::abs(roc.auc - auc_mann_whitney(scores, labels)) < 1e-9);
  return roc;
}

std::string roc_csv(const RocCurve& roc) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc.points) {
    out << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << ',' << format_double(p.fpr)
        << ',' << format_double(p.tpr) << '\n';
  }
  return out.str();
}

}  // namespace derm::eval
