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
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dermnet/adam.hpp"
#include "dermnet/augment.hpp"
#include "dermnet/checkpoint.hpp"
#include "dermnet/model.hpp"
#include "dermnet/pipeline.hpp"
#include "dermnet/preprocess.hpp"

namespace derm::train {

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::size_t val_every_iters = 36;
  std::uint64_t seed = 0;
  nn::AdamHyper optimizer;
  bool balance = true;
  double pca_sigma = 0.1;
  augment::AugmentConfig augment;
  preprocess::PreprocessConfig preprocess;

  std::filesystem::path spec_path;      // empty: default architecture
  std::filesystem::path manifest_path;
  std::filesystem::path data_dir;
  std::filesystem::path preprocessed_dir;  // tensors from the preprocess command
  std::filesystem::path output_dir;        // empty: no files written
  std::filesystem::path resume_path;

  void validate() const;
};

/// key=value lines; '#' comments. Relative paths resolve against base_dir.
TrainConfig parse_train_config(std::string_view text, const std::filesystem::path& base_dir = {});
std::string format_train_config(const TrainConfig& cfg);

struct IterationRecord {
  std::uint64_t epoch = 0;  // 1-based
  std::uint64_t iteration = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct ValidationPoint {
  std::uint64_t epoch = 0;
  std::uint64_t iteration = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double train_loss = 0.0;  // mean iteration loss since the previous point
};

struct EpochRecord {
  std::uint64_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<IterationRecord> iterations;
  std::vector<ValidationPoint> validations;
  std::vector<EpochRecord> epochs;

  /// kind,epoch,iter,loss,acc,seconds with kinds iter/val/epoch.
  std::string to_csv(bool include_seconds = true) const;
};

struct TrainData {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

/// Oversampled copies of the minority class: plan entry i is the source
/// augmented with its params and, for RGB, a PCA colour shift seeded by
/// (seed, i).
std::vector<Sample> synthesize_balance(std::span<const Sample> train, const augment::AugmentConfig& aug, double pca_sigma,
                                       std::uint64_t seed);

/// Epoch-level driver. Owns parameters, optimizer state and the training
/// pool (originals plus balancing copies, built once).
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, nn::ModelSpec spec, TrainData data);

  /// Restores parameters, moments and counters from a checkpoint.
  void resume(const nn::Checkpoint& ckpt);

  /// One pass over the shuffled pool. Validation points and best.ckpt are
  /// produced as iterations cross multiples of val_every_iters.
  EpochRecord run_epoch();

  /// Inference-mode mean BCE and accuracy on the validation set.
  std::pair<double, double> validate() const;

  /// Records a validation point unless the last iteration already has one.
  void final_validation();

  nn::Checkpoint checkpoint() const;

  const nn::Parameters& params() const noexcept { return params_; }
  const nn::AdamState& adam() const noexcept { return adam_; }
  const TrainLog& log() const noexcept { return log_; }
  std::uint64_t epoch() const noexcept { return epoch_; }
  std::uint64_t iteration() const noexcept { return iteration_; }
  double best_val_loss() const noexcept { return best_val_loss_; }
  std::size_t pool_size() const noexcept { return pool_.size(); }
  std::size_t iterations_per_epoch() const noexcept;

 private:
  void record_validation(std::uint64_t epoch);

  TrainConfig cfg_;
  nn::ModelSpec spec_;
  std::vector<Sample> pool_;
  std::vector<Sample> val_;
  nn::Parameters params_;
  nn::AdamState adam_;
  TrainLog log_;
  std::uint64_t epoch_ = 0;
  std::uint64_t iteration_ = 0;
  double best_val_loss_ = std::numeric_limits<double>::infinity();
  double loss_since_val_ = 0.0;
  std::size_t iters_since_val_ = 0;
};

struct TrainResult {
  nn::Parameters params;
  nn::AdamState adam;
  TrainLog log;
  std::uint64_t epochs_completed = 0;
  std::uint64_t iterations = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

/// Trains until cfg.epochs epochs are complete, writing last.ckpt after each
/// epoch and best.ckpt on every new lowest validation loss when output_dir
/// is set. Resumes from cfg.resume_path when given.
TrainResult run_training(const TrainConfig& cfg, const nn::ModelSpec& spec, TrainData data);

struct OverfitReport {
  std::uint64_t best_epoch = 0;
  std::uint64_t best_iteration = 0;
  double best_val_loss = 0.0;
  double final_train_accuracy = 0.0;
  double final_val_accuracy = 0.0;
  double accuracy_gap = 0.0;  // train - val
  std::size_t longest_rise = 0;
  bool overfitting = false;
};

/// Flags overfitting when validation loss rose at `patience` or more
/// consecutive validation points while the training loss at the end of that
/// run is below the training loss where it started.
OverfitReport overfit_report(const TrainLog& log, std::size_t patience = 10);

}  // namespace derm::train
