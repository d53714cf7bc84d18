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
#include "dermnet/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dermnet/error.hpp"
#include "dermnet/text.hpp"

namespace derm::eval {

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

}  // namespace

std::vector<double> score(const nn::ModelSpec& spec, const nn::Parameters& params, std::span<const Sample> samples,
                          std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const nn::Tensor probs = nn::predict(spec, params, make_batch(samples, idx));
    for (std::size_t i = 0; i < probs.size(); ++i) out.push_back(probs[i]);
  }
  return out;
}

Evaluation evaluate(const nn::ModelSpec& spec, const nn::Parameters& params, std::span<const Sample> samples,
                    std::string split_name, double threshold) {
  if (samples.empty()) fail(ErrorCode::EmptySplit, "split '" + split_name + "' has no labeled samples");
  Evaluation e;
  e.split = std::move(split_name);
  for (const Sample& s : samples) {
    e.image_ids.push_back(s.image_id);
    e.labels.push_back(s.label);
  }
  e.scores = score(spec, params, samples);
  e.confusion = confusion(e.scores, e.labels, threshold);
  e.metrics = metrics(e.confusion);
  try {
    e.roc = roc_auc(e.scores, e.labels);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::SingleClass) throw;
  }
  return e;
}

Evaluation evaluate(const nn::Checkpoint& ckpt, std::span<const Sample> samples, std::string split_name,
                    double threshold) {
  return evaluate(ckpt.spec, ckpt.params, samples, std::move(split_name), threshold);
}

std::string format_report(const Evaluation& e, std::optional<double> train_accuracy) {
  std::ostringstream out;
  out << "split: " << e.split << " (" << e.scores.size() << " samples)\n\n";
  out << "Model | Precision | Recall | F1 score | Training Acc | Testing Acc | AUC\n";
  out << "DCNN | " << percent(e.metrics.precision) << " | " << percent(e.metrics.recall) << " | "
      << percent(e.metrics.f1) << " | " << (train_accuracy ? percent(*train_accuracy) : std::string("n/a")) << " | "
      << percent(e.metrics.accuracy) << " | " << (e.roc ? format_double(e.roc->auc) : std::string("n/a")) << "\n\n";
  out << "tp=" << e.confusion.tp << "\n"
      << "tn=" << e.confusion.tn << "\n"
      << "fp=" << e.confusion.fp << "\n"
      << "fn=" << e.confusion.fn << "\n"
      << "precision=" << format_double(e.metrics.precision) << "\n"
      << "recall=" << format_double(e.metrics.recall) << "\n"
      << "f1=" << format_double(e.metrics.f1) << "\n"
      << "accuracy=" << format_double(e.metrics.accuracy) << "\n"
      << "auc=" << (e.roc ? format_double(e.roc->auc) : std::string("n/a")) << "\n";
  if (train_accuracy) out << "train_accuracy=" << format_double(*train_accuracy) << "\n";
  if (e.metrics.has(PrecisionUndefined)) out << "flag=PrecisionUndefined\n";
  if (e.metrics.has(RecallUndefined)) out << "flag=RecallUndefined\n";
  return out.str();
}

std::string scores_csv(const Evaluation& e) {
  std::ostringstream out;
  out << "image_id,label,score\n";
  for (std::size_t i = 0; i < e.scores.size(); ++i) {
    out << e.image_ids[i] << ',' << e.labels[i] << ',' << format_double(e.scores[i]) << '\n';
  }
  return out.str();
}

TimingReport benchmark_epoch(const nn::ModelSpec& spec, const train::TrainConfig& cfg, std::span<const Sample> train,
                             std::size_t n_epochs, std::string hardware_note) {
  if (n_epochs < 1) fail(ErrorCode::InvalidArgument, "benchmark needs at least one epoch");
  train::TrainConfig bench = cfg;
  bench.output_dir.clear();
  bench.resume_path.clear();
  bench.val_every_iters = std::numeric_limits<std::size_t>::max();
  train::TrainData data;
  data.train.assign(train.begin(), train.end());
  data.val.assign(train.begin(), train.begin() + std::min<std::size_t>(train.size(), 1));

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  train::Trainer trainer(bench, spec, std::move(data));
  trainer.run_epoch();
  TimingReport report;
  report.warmup_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  report.train_size = trainer.pool_size();
  report.hardware_note = std::move(hardware_note);
  for (std::size_t i = 0; i < n_epochs; ++i) {
    const auto start = clock::now();
    trainer.run_epoch();
    report.seconds_per_epoch.push_back(std::chrono::duration<double>(clock::now() - start).count());
  }
  report.total_minutes = std::chrono::duration<double>(clock::now() - t0).count() / 60.0;
  return report;
}

std::string format_timing(const TimingReport& t) {
  std::ostringstream out;
  out << "train_size=" << t.train_size << "\n"
      << "warmup_seconds=" << format_double(t.warmup_seconds) << "\n";
  for (std::size_t i = 0; i < t.seconds_per_epoch.size(); ++i) {
    out << "epoch_" << (i + 1) << "_seconds=" << format_double(t.seconds_per_epoch[i]) << "\n";
  }
  out << "total_minutes=" << format_double(t.total_minutes) << "\n"
      << "hardware=" << t.hardware_note << "\n";
  return out.str();
}

}  // namespace derm::eval
