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
#include "dermnet/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "dermnet/dataset.hpp"
#include "dermnet/error.hpp"
#include "dermnet/parallel.hpp"
#include "dermnet/rng.hpp"
#include "dermnet/text.hpp"

namespace derm::train {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(ErrorCode::InvalidArgument, "config key '" + key + "': bad number '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorCode::InvalidArgument, "config key '" + key + "': bad boolean '" + value + "'");
}

preprocess::DenoiseMethod parse_denoise(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty()) fail(ErrorCode::InvalidArgument, "empty denoise method");
  if (parts[0] == "none" && parts.size() == 1) return preprocess::NoDenoise{};
  if (parts[0] == "median" && parts.size() == 2) {
    return preprocess::MedianDenoise{parse_number<std::size_t>("preprocess.denoise", parts[1])};
  }
  if (parts[0] == "gaussian" && parts.size() == 3) {
    return preprocess::GaussianDenoise{parse_number<std::size_t>("preprocess.denoise", parts[1]),
                                       parse_number<double>("preprocess.denoise", parts[2])};
  }
  fail(ErrorCode::InvalidArgument, "denoise must be none, median:<k> or gaussian:<k>:<sigma>, got '" + value + "'");
}

std::string format_denoise(const preprocess::DenoiseMethod& m) {
  if (const auto* med = std::get_if<preprocess::MedianDenoise>(&m)) return "median:" + std::to_string(med->kernel);
  if (const auto* g = std::get_if<preprocess::GaussianDenoise>(&m)) {
    return "gaussian:" + std::to_string(g->kernel) + ":" + format_double(g->sigma);
  }
  return "none";
}

preprocess::Normalization parse_normalization(const std::string& value) {
  if (value == "minmax") return preprocess::Normalization::MinMax;
  if (value == "zscore") return preprocess::Normalization::ZScore;
  if (value == "decimal") return preprocess::Normalization::DecimalScaling;
  fail(ErrorCode::InvalidArgument, "normalize must be minmax, zscore or decimal, got '" + value + "'");
}

std::string format_normalization(preprocess::Normalization n) {
  switch (n) {
    case preprocess::Normalization::MinMax: return "minmax";
    case preprocess::Normalization::ZScore: return "zscore";
    case preprocess::Normalization::DecimalScaling: return "decimal";
  }
  return "minmax";
}

double accuracy_of(const nn::Tensor& probs, const nn::Tensor& labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) correct += ((probs[i] >= 0.5) == (labels[i] == 1.0)) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

bool grads_finite(const nn::Gradients& g) {
  return std::all_of(g.begin(), g.end(), [](const nn::LayerParams& p) { return p.weight.all_finite() && p.bias.all_finite(); });
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (val_every_iters < 1) fail(ErrorCode::InvalidArgument, "val_every_iters must be >= 1");
  if (!(optimizer.lr > 0.0)) fail(ErrorCode::InvalidArgument, "lr must be positive");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    fail(ErrorCode::InvalidArgument, "Adam betas must lie in [0, 1)");
  }
  if (!(optimizer.eps > 0.0)) fail(ErrorCode::InvalidArgument, "eps must be positive");
  if (!(pca_sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "pca_sigma must be >= 0");
  augment.validate();
  preprocess.validate();
}

TrainConfig parse_train_config(std::string_view text, const std::filesystem::path& base_dir) {
  TrainConfig cfg;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
  };
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "batch_size") cfg.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "epochs") cfg.epochs = parse_number<std::size_t>(key, value);
    else if (key == "val_every_iters") cfg.val_every_iters = parse_number<std::size_t>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "lr") cfg.optimizer.lr = parse_number<double>(key, value);
    else if (key == "beta1") cfg.optimizer.beta1 = parse_number<double>(key, value);
    else if (key == "beta2") cfg.optimizer.beta2 = parse_number<double>(key, value);
    else if (key == "eps") cfg.optimizer.eps = parse_number<double>(key, value);
    else if (key == "balance") cfg.balance = parse_bool(key, value);
    else if (key == "pca_sigma") cfg.pca_sigma = parse_number<double>(key, value);
    else if (key == "spec_path") cfg.spec_path = path_of(value);
    else if (key == "manifest_path") cfg.manifest_path = path_of(value);
    else if (key == "data_dir") cfg.data_dir = path_of(value);
    else if (key == "preprocessed_dir") cfg.preprocessed_dir = path_of(value);
    else if (key == "output_dir") cfg.output_dir = path_of(value);
    else if (key == "resume") cfg.resume_path = path_of(value);
    else if (key == "augment.rotation_range") cfg.augment.rotation_range = parse_number<double>(key, value);
    else if (key == "augment.height_shift_range") cfg.augment.height_shift_range = parse_number<double>(key, value);
    else if (key == "augment.width_shift_range") cfg.augment.width_shift_range = parse_number<double>(key, value);
    else if (key == "augment.shear_range") cfg.augment.shear_range = parse_number<double>(key, value);
    else if (key == "augment.zoom_range") cfg.augment.zoom_range = parse_number<double>(key, value);
    else if (key == "augment.channel_shift_range") cfg.augment.channel_shift_range = parse_number<double>(key, value);
    else if (key == "augment.horizontal_flip") cfg.augment.horizontal_flip = parse_bool(key, value);
    else if (key == "augment.fill_mode") {
      if (value != "nearest") fail(ErrorCode::InvalidArgument, "augment.fill_mode supports only 'nearest'");
    }
    else if (key == "preprocess.t_r1") cfg.preprocess.t_r1 = parse_number<double>(key, value);
    else if (key == "preprocess.t_r2") cfg.preprocess.t_r2 = parse_number<double>(key, value);
    else if (key == "preprocess.mean_window") cfg.preprocess.mean_window = parse_number<std::size_t>(key, value);
    else if (key == "preprocess.denoise") cfg.preprocess.denoise = parse_denoise(value);
    else if (key == "preprocess.normalize") cfg.preprocess.normalize = parse_normalization(value);
    else if (key == "preprocess.size") {
      cfg.preprocess.target_height = cfg.preprocess.target_width = parse_number<std::size_t>(key, value);
    }
    else fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

std::string format_train_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "batch_size=" << cfg.batch_size << "\n"
      << "epochs=" << cfg.epochs << "\n"
      << "val_every_iters=" << cfg.val_every_iters << "\n"
      << "seed=" << cfg.seed << "\n"
      << "lr=" << format_double(cfg.optimizer.lr) << "\n"
      << "beta1=" << format_double(cfg.optimizer.beta1) << "\n"
      << "beta2=" << format_double(cfg.optimizer.beta2) << "\n"
      << "eps=" << format_double(cfg.optimizer.eps) << "\n"
      << "balance=" << (cfg.balance ? "true" : "false") << "\n"
      << "pca_sigma=" << format_double(cfg.pca_sigma) << "\n";
  auto path_line = [&](const char* key, const std::filesystem::path& p) {
    if (!p.empty()) out << key << "=" << p.string() << "\n";
  };
  path_line("spec_path", cfg.spec_path);
  path_line("manifest_path", cfg.manifest_path);
  path_line("data_dir", cfg.data_dir);
  path_line("preprocessed_dir", cfg.preprocessed_dir);
  path_line("output_dir", cfg.output_dir);
  path_line("resume", cfg.resume_path);
  out << "augment.rotation_range=" << format_double(cfg.augment.rotation_range) << "\n"
      << "augment.height_shift_range=" << format_double(cfg.augment.height_shift_range) << "\n"
      << "augment.width_shift_range=" << format_double(cfg.augment.width_shift_range) << "\n"
      << "augment.shear_range=" << format_double(cfg.augment.shear_range) << "\n"
      << "augment.zoom_range=" << format_double(cfg.augment.zoom_range) << "\n"
      << "augment.channel_shift_range=" << format_double(cfg.augment.channel_shift_range) << "\n"
      << "augment.horizontal_flip=" << (cfg.augment.horizontal_flip ? "true" : "false") << "\n"
      << "augment.fill_mode=nearest\n"
      << "preprocess.t_r1=" << format_double(cfg.preprocess.t_r1) << "\n"
      << "preprocess.t_r2=" << format_double(cfg.preprocess.t_r2) << "\n"
      << "preprocess.mean_window=" << cfg.preprocess.mean_window << "\n"
      << "preprocess.denoise=" << format_denoise(cfg.preprocess.denoise) << "\n"
      << "preprocess.normalize=" << format_normalization(cfg.preprocess.normalize) << "\n";
  if (cfg.preprocess.target_height == cfg.preprocess.target_width) {
    out << "preprocess.size=" << cfg.preprocess.target_height << "\n";
  }
  return out.str();
}

std::string TrainLog::to_csv(bool include_seconds) const {
  std::ostringstream out;
  out << "kind,epoch,iter,loss,acc,seconds\n";
  for (const auto& r : iterations) {
    out << "iter," << r.epoch << ',' << r.iteration << ',' << format_double(r.loss) << ',' << format_double(r.accuracy) << ",\n";
  }
  for (const auto& v : validations) {
    out << "val," << v.epoch << ',' << v.iteration << ',' << format_double(v.loss) << ',' << format_double(v.accuracy) << ",\n";
  }
  for (const auto& e : epochs) {
    out << "epoch," << e.epoch << ",," << format_double(e.train_loss) << ',' << format_double(e.train_accuracy) << ','
        << (include_seconds ? format_double(e.seconds) : std::string()) << '\n';
  }
  return out.str();
}

std::vector<Sample> synthesize_balance(std::span<const Sample> train, const augment::AugmentConfig& aug, double pca_sigma,
                                       std::uint64_t seed) {
  std::vector<augment::BalanceItem> items;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < train.size(); ++i) {
    items.push_back({train[i].image_id, train[i].label == 1 ? dataset::Label::Malignant : dataset::Label::Benign});
    index_of[train[i].image_id] = i;
  }
  const std::vector<augment::PlanEntry> plan = augment::balance(items, aug, seed);
  std::vector<Sample> out(plan.size());
  parallel_for(plan.size(), [&](std::size_t i) {
    const augment::PlanEntry& entry = plan[i];
    const Sample& src = train[index_of.at(entry.source_image_id)];
    ImageBuffer img = augment::apply(to_image(src), entry.params);
    if (img.channels() == 3 && pca_sigma > 0.0) {
      img = augment::pca_color_shift(img, derive_key({seed, entry.seed_index}), pca_sigma);
    }
    out[i] = to_sample(img, entry.source_image_id + "#aug" + std::to_string(entry.seed_index), src.label);
  });
  return out;
}

Trainer::Trainer(const TrainConfig& cfg, nn::ModelSpec spec, TrainData data)
    : cfg_(cfg), spec_(std::move(spec)), pool_(std::move(data.train)), val_(std::move(data.val)) {
  cfg_.validate();
  try {
    nn::validate(spec_);
  } catch (const Error& e) {
    fail(ErrorCode::SpecInvalid, e.message());
  }
  if (pool_.empty()) fail(ErrorCode::EmptySplit, "training split is empty");
  if (val_.empty()) fail(ErrorCode::EmptySplit, "validation split is empty");
  if (cfg_.balance) {
    std::vector<Sample> extra = synthesize_balance(pool_, cfg_.augment, cfg_.pca_sigma, cfg_.seed);
    pool_.insert(pool_.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  }
  params_ = nn::init_params(spec_, cfg_.seed);
  adam_ = nn::make_adam_state(params_, cfg_.optimizer);
}

void Trainer::resume(const nn::Checkpoint& ckpt) {
  if (!(ckpt.spec == spec_)) fail(ErrorCode::SpecInvalid, "checkpoint architecture differs from the configured model");
  params_ = ckpt.params;
  adam_ = ckpt.adam;
  adam_.hyper = cfg_.optimizer;
  epoch_ = ckpt.epoch;
  iteration_ = ckpt.iteration;
  best_val_loss_ = ckpt.best_val_loss;
}

std::size_t Trainer::iterations_per_epoch() const noexcept { return (pool_.size() + cfg_.batch_size - 1) / cfg_.batch_size; }

std::pair<double, double> Trainer::validate() const {
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < val_.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(val_.size(), start + cfg_.batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    nn::Tensor labels;
    const nn::Tensor batch = make_batch(val_, idx, &labels);
    const nn::Tensor probs = nn::predict(spec_, params_, batch);
    loss_sum += nn::bce_loss(probs, labels) * static_cast<double>(idx.size());
    for (std::size_t i = 0; i < probs.size(); ++i) correct += ((probs[i] >= 0.5) == (labels[i] == 1.0)) ? 1 : 0;
  }
  const double n = static_cast<double>(val_.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

void Trainer::record_validation(std::uint64_t epoch) {
  const auto [loss, acc] = validate();
  const double train_loss = iters_since_val_ ? loss_since_val_ / static_cast<double>(iters_since_val_)
                                             : (log_.iterations.empty() ? 0.0 : log_.iterations.back().loss);
  log_.validations.push_back({epoch, iteration_, loss, acc, train_loss});
  loss_since_val_ = 0.0;
  iters_since_val_ = 0;
  if (loss < best_val_loss_) {
    best_val_loss_ = loss;
    if (!cfg_.output_dir.empty()) nn::save_checkpoint(cfg_.output_dir / "best.ckpt", checkpoint());
  }
}

EpochRecord Trainer::run_epoch() {
  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t epoch_number = epoch_ + 1;

  std::vector<std::size_t> order(pool_.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(cfg_.seed, Stream::Shuffle, epoch_number);
  shuffle(std::span<std::size_t>(order), rng);

  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    nn::Tensor labels;
    const nn::Tensor batch = make_batch(pool_, idx, &labels);
    const std::uint64_t next_iteration = iteration_ + 1;

    nn::ForwardResult fwd;
    try {
      fwd = nn::forward(spec_, params_, batch, nn::Mode::Train, derive_key({cfg_.seed, next_iteration}));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteValue) {
        fail(ErrorCode::NonFiniteLoss, "iteration " + std::to_string(next_iteration) + ": " + e.message());
      }
      throw;
    }
    const double loss = nn::bce_loss(fwd.probs, labels);
    if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "iteration " + std::to_string(next_iteration));
    const nn::Gradients grads = nn::backward(spec_, params_, fwd.cache, labels);
    if (!grads_finite(grads)) {
      fail(ErrorCode::NonFiniteLoss, "iteration " + std::to_string(next_iteration) + ": non-finite gradient");
    }
    nn::adam_step(params_, grads, adam_);
    nn::round_to_float(params_);
    nn::round_to_float(adam_);
    iteration_ = next_iteration;

    const double acc = accuracy_of(fwd.probs, labels);
    log_.iterations.push_back({epoch_number, iteration_, loss, acc});
    loss_sum += loss * static_cast<double>(idx.size());
    correct += static_cast<std::size_t>(std::lround(acc * static_cast<double>(idx.size())));
    loss_since_val_ += loss;
    ++iters_since_val_;

    if (iteration_ % cfg_.val_every_iters == 0) record_validation(epoch_number);
  }

  epoch_ = epoch_number;
  const double n = static_cast<double>(pool_.size());
  EpochRecord rec{epoch_number, loss_sum / n, static_cast<double>(correct) / n,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()};
  log_.epochs.push_back(rec);
  if (!cfg_.output_dir.empty()) nn::save_checkpoint(cfg_.output_dir / "last.ckpt", checkpoint());
  return rec;
}

void Trainer::final_validation() {
  if (!log_.validations.empty() && log_.validations.back().iteration == iteration_) return;
  record_validation(epoch_);
}

nn::Checkpoint Trainer::checkpoint() const {
  nn::Checkpoint c;
  c.spec = spec_;
  c.params = params_;
  c.adam = adam_;
  c.seed = cfg_.seed;
  c.epoch = epoch_;
  c.iteration = iteration_;
  c.best_val_loss = best_val_loss_;
  return c;
}

TrainResult run_training(const TrainConfig& cfg, const nn::ModelSpec& spec, TrainData data) {
  Trainer trainer(cfg, spec, std::move(data));
  if (!cfg.resume_path.empty()) trainer.resume(nn::load_checkpoint(cfg.resume_path));
  const std::uint64_t start_epoch = trainer.epoch();
  while (trainer.epoch() < cfg.epochs) trainer.run_epoch();
  if (trainer.epoch() > start_epoch) trainer.final_validation();
  return {trainer.params(), trainer.adam(), trainer.log(), trainer.epoch(), trainer.iteration(), trainer.best_val_loss()};
}

OverfitReport overfit_report(const TrainLog& log, std::size_t patience) {
  const auto& v = log.validations;
  if (v.size() < 2) fail(ErrorCode::InsufficientLog, "need at least two validation points, have " + std::to_string(v.size()));
  OverfitReport r;
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].loss <= v[best].loss) best = i;
  }
  r.best_epoch = v[best].epoch;
  r.best_iteration = v[best].iteration;
  r.best_val_loss = v[best].loss;
  r.final_val_accuracy = v.back().accuracy;
  r.final_train_accuracy = log.epochs.empty() ? 0.0 : log.epochs.back().train_accuracy;
  r.accuracy_gap = r.final_train_accuracy - r.final_val_accuracy;

  std::size_t run_start = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].loss > v[i - 1].loss) {
      const std::size_t rises = i - run_start;
      r.longest_rise = std::max(r.longest_rise, rises);
      if (rises >= patience && v[i].train_loss < v[run_start].train_loss) r.overfitting = true;
    } else {
      run_start = i;
    }
  }
  return r;
}

}  // namespace derm::train
