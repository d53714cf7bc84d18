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
#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "dermnet/augment.hpp"
#include "dermnet/checkpoint.hpp"
#include "dermnet/dataset.hpp"
#include "dermnet/error.hpp"
#include "dermnet/evaluate.hpp"
#include "dermnet/explain.hpp"
#include "dermnet/fixture.hpp"
#include "dermnet/parallel.hpp"
#include "dermnet/pipeline.hpp"
#include "dermnet/preprocess.hpp"
#include "dermnet/text.hpp"
#include "dermnet/train.hpp"

namespace derm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kManifestFormat = 1;
constexpr int kTrainLogFormat = 1;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  std::string data_dir;
  std::string output_dir = "out";
};

struct Context {
  Globals g;
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
  json record = json::object();

  fs::path output() const { return g.output_dir; }
  fs::path data() const {
    if (g.data_dir.empty()) fail(ErrorCode::InvalidArgument, "no data directory: pass --data-dir or set DERM_DATA_DIR");
    return g.data_dir;
  }
  fs::path image_dir(const std::string& flag) const { return flag.empty() ? data() / "images" : fs::path(flag); }
};

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) fail(ErrorCode::IoError, std::string(what) + " not found: " + p.string());
}

dataset::DatasetManifest read_manifest(const fs::path& path, const fs::path& image_dir) {
  require_file(path, "manifest");
  return dataset::parse_manifest(dataset::read_text_file(path), image_dir);
}

void write_run_record(Context& ctx, const std::string& command) {
  json j;
  j["command"] = command;
  j["args"] = ctx.args;
  j["version"] = kVersion;
  j["seed"] = ctx.g.seed;
  j["threads"] = ctx.g.threads;
  j["data_dir"] = ctx.g.data_dir;
  j["output_dir"] = ctx.g.output_dir;
  j["formats"] = {{"container", nn::kContainerVersion}, {"manifest", kManifestFormat}, {"train_log", kTrainLogFormat}};
  j["config"] = ctx.record;
  fs::create_directories(ctx.output());
  dataset::write_text_file(ctx.output() / "run.json", j.dump(2) + "\n");
}

nn::ModelSpec load_spec(const train::TrainConfig& cfg) {
  if (cfg.spec_path.empty()) return nn::default_spec(cfg.preprocess.target_height, cfg.preprocess.target_width, 3);
  require_file(cfg.spec_path, "model spec");
  return nn::parse_model_spec(dataset::read_text_file(cfg.spec_path));
}

train::TrainConfig load_train_config(const fs::path& path) {
  require_file(path, "config");
  return train::parse_train_config(dataset::read_text_file(path), path.parent_path());
}

preprocess::PreprocessConfig sized(preprocess::PreprocessConfig cfg, const nn::InputShape& in) {
  cfg.target_height = in.height;
  cfg.target_width = in.width;
  return cfg;
}

std::vector<Sample> load_samples(const dataset::DatasetManifest& m, dataset::Split split,
                                 const preprocess::PreprocessConfig& pre, const nn::InputShape& input,
                                 const fs::path& tensor_dir) {
  if (!tensor_dir.empty()) return load_split(m, split, pre, input, tensor_loader(tensor_dir), true);
  return load_split(m, split, pre, input, file_loader(), false);
}

// ---------------------------------------------------------------- ingest

struct IngestOpts {
  std::string metadata;
  std::string image_dir;
  std::string exclude;
  bool quality = false;
};

void run_ingest(Context& ctx, const IngestOpts& o) {
  const fs::path metadata = o.metadata.empty() ? ctx.data() / "metadata.csv" : fs::path(o.metadata);
  require_file(metadata, "metadata");
  const fs::path images = ctx.image_dir(o.image_dir);
  std::vector<dataset::SampleRecord> records = dataset::parse_metadata(dataset::read_text_file(metadata), images);
  if (!o.exclude.empty()) {
    require_file(o.exclude, "exclusion list");
    records = dataset::apply_exclusions(std::move(records), dataset::parse_exclusion_list(dataset::read_text_file(o.exclude)));
  }
  fs::create_directories(ctx.output());
  if (o.quality) {
    std::vector<dataset::QualityReport> reports(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
      if (records[i].label == dataset::Label::Undetermined) {
        reports[i].image_id = records[i].image_id;
        return;
      }
      reports[i] = dataset::quality_filter(load_image(records[i].image_path), {}, records[i].image_id);
    });
    std::ostringstream csv;
    csv << "image_id,kept,reason,sharpness,contrast\n";
    std::set<std::string> rejected;
    for (const auto& r : reports) {
      csv << r.image_id << ',' << (r.kept ? 1 : 0) << ',' << dataset::to_string(r.reject_reason) << ','
          << format_double(r.sharpness_score) << ',' << format_double(r.contrast_score) << '\n';
      if (!r.kept) rejected.insert(r.image_id);
    }
    dataset::write_text_file(ctx.output() / "quality.csv", csv.str());
    records = dataset::apply_exclusions(std::move(records), rejected);
  }
  dataset::DatasetManifest m;
  m.records = std::move(records);
  dataset::write_text_file(ctx.output() / "manifest.csv", dataset::format_manifest(m));
  const auto benign = std::count_if(m.records.begin(), m.records.end(), [](const auto& r) { return r.label == dataset::Label::Benign; });
  const auto malignant = std::count_if(m.records.begin(), m.records.end(), [](const auto& r) { return r.label == dataset::Label::Malignant; });
  ctx.out << "records=" << m.records.size() << " benign=" << benign << " malignant=" << malignant << "\n";
  ctx.record = {{"metadata", metadata.string()}, {"image_dir", images.string()}, {"exclude", o.exclude}, {"quality", o.quality}};
}

// ---------------------------------------------------------------- split

struct SplitOpts {
  std::string manifest;
  double train = 0.7, val = 0.2, test = 0.1;
};

void run_split(Context& ctx, const SplitOpts& o) {
  const fs::path in = o.manifest.empty() ? ctx.output() / "manifest.csv" : fs::path(o.manifest);
  const dataset::DatasetManifest m = read_manifest(in, {});
  dataset::SplitConfig cfg{o.train, o.val, o.test, ctx.g.seed};
  const dataset::DatasetManifest out = dataset::split(m, cfg);
  fs::create_directories(ctx.output());
  dataset::write_text_file(ctx.output() / "split.csv", dataset::format_manifest(out));
  for (dataset::Split s : {dataset::Split::Train, dataset::Split::Val, dataset::Split::Test}) {
    ctx.out << dataset::to_string(s) << ": benign=" << out.count(s, dataset::Label::Benign)
            << " malignant=" << out.count(s, dataset::Label::Malignant) << "\n";
  }
  ctx.record = {{"manifest", in.string()}, {"train", o.train}, {"val", o.val}, {"test", o.test}};
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOpts {
  std::string manifest;
  std::string image_dir;
  std::string config;
  std::size_t size = 0;
};

void run_preprocess(Context& ctx, const PreprocessOpts& o) {
  const fs::path in = o.manifest.empty() ? ctx.output() / "split.csv" : fs::path(o.manifest);
  preprocess::PreprocessConfig cfg = o.config.empty() ? preprocess::PreprocessConfig{} : load_train_config(o.config).preprocess;
  if (o.size) cfg.target_height = cfg.target_width = o.size;
  cfg.validate();
  const dataset::DatasetManifest m = read_manifest(in, ctx.image_dir(o.image_dir));
  const fs::path tensors = ctx.output() / "tensors";
  fs::create_directories(tensors);

  std::vector<const dataset::SampleRecord*> todo;
  for (const auto& r : m.records) {
    if (r.label != dataset::Label::Undetermined) todo.push_back(&r);
  }
  std::vector<preprocess::PreprocessResult> results(todo.size());
  parallel_for(todo.size(), [&](std::size_t i) {
    results[i] = preprocess::run_pipeline(load_image(todo[i]->image_path), cfg);
    nn::save_image_tensor(tensors / (todo[i]->image_id + ".dcnt"), results[i].image, todo[i]->image_id);
  });
  std::ostringstream report;
  report << "image_id,n_flagged_pixels,kept\n";
  std::size_t inpainted = 0;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    report << todo[i]->image_id << ',' << results[i].flagged_pixels << ",1\n";
    inpainted += results[i].inpainted ? 1 : 0;
  }
  dataset::write_text_file(ctx.output() / "preprocess_report.csv", report.str());
  ctx.out << "processed=" << todo.size() << " inpainted=" << inpainted << "\n";
  ctx.record = {{"manifest", in.string()}, {"size", cfg.target_height}};
}

// ---------------------------------------------------------------- augment-preview

struct PreviewOpts {
  std::string manifest;
  std::string image_dir;
  std::string image;
  std::size_t count = 8;
};

void run_augment_preview(Context& ctx, const PreviewOpts& o) {
  const fs::path images = ctx.image_dir(o.image_dir);
  fs::path source = images / (o.image + ".jpg");
  if (!o.manifest.empty()) {
    const dataset::DatasetManifest m = read_manifest(o.manifest, images);
    auto it = std::find_if(m.records.begin(), m.records.end(), [&](const auto& r) { return r.image_id == o.image; });
    if (it == m.records.end()) fail(ErrorCode::IoError, "image id not in manifest: " + o.image);
    source = it->image_path;
  }
  require_file(source, "image");
  const ImageBuffer img = load_image(source);
  const augment::AugmentConfig cfg;
  std::vector<augment::PlanEntry> plan(o.count);
  std::vector<augment::AugmentParams> params(o.count);
  for (std::size_t i = 0; i < o.count; ++i) {
    params[i] = augment::sample_params(cfg, ctx.g.seed, i);
    plan[i] = {o.image, i, params[i]};
  }
  const std::vector<ImageBuffer> variants = augment::apply_batch(std::vector<ImageBuffer>(o.count, img), params);
  const fs::path dir = ctx.output() / "preview";
  fs::create_directories(dir);
  for (std::size_t i = 0; i < o.count; ++i) save_jpeg(variants[i], dir / (o.image + "_" + std::to_string(i) + ".jpg"));
  dataset::write_text_file(dir / "plan.csv", augment::format_plan(plan));
  ctx.out << "wrote " << o.count << " variants to " << dir.string() << "\n";
  ctx.record = {{"image", o.image}, {"count", o.count}};
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::string config;
};

void run_train(Context& ctx, const TrainOpts& o) {
  train::TrainConfig cfg = load_train_config(o.config);
  if (ctx.g.seed_given) cfg.seed = ctx.g.seed;
  if (cfg.output_dir.empty()) cfg.output_dir = ctx.output();
  ctx.g.output_dir = cfg.output_dir.string();
  if (cfg.manifest_path.empty()) fail(ErrorCode::InvalidArgument, "config has no manifest_path");
  const fs::path images = cfg.data_dir.empty() ? ctx.image_dir("") : cfg.data_dir / "images";
  const dataset::DatasetManifest m = read_manifest(cfg.manifest_path, images);
  const nn::ModelSpec spec = load_spec(cfg);
  nn::validate(spec);
  const preprocess::PreprocessConfig pre = sized(cfg.preprocess, spec.input);
  ctx.record = json::object();
  ctx.record["train_config"] = train::format_train_config(cfg);
  ctx.record["model_spec"] = nn::format_model_spec(spec);

  train::TrainData data;
  data.train = load_samples(m, dataset::Split::Train, pre, spec.input, cfg.preprocessed_dir);
  data.val = load_samples(m, dataset::Split::Val, pre, spec.input, cfg.preprocessed_dir);
  fs::create_directories(cfg.output_dir);
  const train::TrainResult r = train::run_training(cfg, spec, std::move(data));
  dataset::write_text_file(cfg.output_dir / "train_log.csv", r.log.to_csv());
  ctx.out << "epochs=" << r.epochs_completed << " iterations=" << r.iterations
          << " best_val_loss=" << format_double(r.best_val_loss) << "\n";
  if (r.log.validations.size() >= 2) {
    const train::OverfitReport rep = train::overfit_report(r.log);
    ctx.out << "best_epoch=" << rep.best_epoch << " overfitting=" << (rep.overfitting ? "yes" : "no") << "\n";
  }
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::string ckpt;
  std::string manifest;
  std::string image_dir;
  std::string preprocessed_dir;
  std::string config;
  std::string split = "test";
  double threshold = 0.5;
};

void run_evaluate(Context& ctx, const EvaluateOpts& o) {
  require_file(o.ckpt, "checkpoint");
  const nn::Checkpoint ckpt = nn::load_checkpoint(o.ckpt);
  const auto split = dataset::parse_split(o.split);
  if (!split) fail(ErrorCode::InvalidArgument, "unknown split '" + o.split + "'");
  const dataset::DatasetManifest m = read_manifest(o.manifest, ctx.image_dir(o.image_dir));
  const preprocess::PreprocessConfig pre =
      sized(o.config.empty() ? preprocess::PreprocessConfig{} : load_train_config(o.config).preprocess, ckpt.spec.input);
  const std::vector<Sample> samples = load_samples(m, *split, pre, ckpt.spec.input, o.preprocessed_dir);
  const eval::Evaluation e = eval::evaluate(ckpt, samples, o.split, o.threshold);

  std::optional<double> train_acc;
  if (*split != dataset::Split::Train) {
    const std::vector<Sample> train = load_samples(m, dataset::Split::Train, pre, ckpt.spec.input, o.preprocessed_dir);
    if (!train.empty()) train_acc = eval::evaluate(ckpt, train, "train", o.threshold).metrics.accuracy;
  }
  fs::create_directories(ctx.output());
  const std::string report = eval::format_report(e, train_acc);
  dataset::write_text_file(ctx.output() / "report.txt", report);
  dataset::write_text_file(ctx.output() / "scores.csv", eval::scores_csv(e));
  if (e.roc) dataset::write_text_file(ctx.output() / "roc.csv", eval::roc_csv(*e.roc));
  ctx.out << report;
  ctx.record = {{"ckpt", o.ckpt}, {"manifest", o.manifest}, {"split", o.split}, {"threshold", o.threshold}};
}

// ---------------------------------------------------------------- predict

struct PredictOpts {
  std::string ckpt;
  std::vector<std::string> images;
  std::string config;
  double threshold = 0.5;
};

void run_predict(Context& ctx, const PredictOpts& o) {
  require_file(o.ckpt, "checkpoint");
  const nn::Checkpoint ckpt = nn::load_checkpoint(o.ckpt);
  const preprocess::PreprocessConfig pre =
      sized(o.config.empty() ? preprocess::PreprocessConfig{} : load_train_config(o.config).preprocess, ckpt.spec.input);
  std::vector<Sample> samples(o.images.size());
  for (const auto& p : o.images) require_file(p, "image");
  parallel_for(o.images.size(), [&](std::size_t i) {
    const ImageBuffer img = match_channels(preprocess::run_pipeline(load_image(o.images[i]), pre).image, ckpt.spec.input.channels);
    samples[i] = to_sample(img, fs::path(o.images[i]).stem().string(), 0);
  });
  const std::vector<double> probs = eval::score(ckpt.spec, ckpt.params, samples);
  std::ostringstream csv;
  csv << "image,probability,predicted\n";
  for (std::size_t i = 0; i < probs.size(); ++i) {
    csv << o.images[i] << ',' << format_double(probs[i]) << ',' << (probs[i] >= o.threshold ? 1 : 0) << '\n';
  }
  fs::create_directories(ctx.output());
  dataset::write_text_file(ctx.output() / "predictions.csv", csv.str());
  ctx.out << csv.str();
  ctx.record = {{"ckpt", o.ckpt}, {"images", o.images}, {"threshold", o.threshold}};
}

// ---------------------------------------------------------------- saliency

struct SaliencyOpts {
  std::string image;
  std::string ckpt;
  std::string manifest;
  std::string image_dir;
  std::string config;
  std::size_t patch = 8;
  std::size_t stride = 4;
};

void run_saliency(Context& ctx, const SaliencyOpts& o) {
  require_file(o.ckpt, "checkpoint");
  const nn::Checkpoint ckpt = nn::load_checkpoint(o.ckpt);
  const fs::path images = ctx.image_dir(o.image_dir);
  fs::path source = images / (o.image + ".jpg");
  if (!o.manifest.empty()) {
    const dataset::DatasetManifest m = read_manifest(o.manifest, images);
    auto it = std::find_if(m.records.begin(), m.records.end(), [&](const auto& r) { return r.image_id == o.image; });
    if (it == m.records.end()) fail(ErrorCode::IoError, "image id not in manifest: " + o.image);
    source = it->image_path;
  }
  require_file(source, "image");
  const preprocess::PreprocessConfig pre =
      sized(o.config.empty() ? preprocess::PreprocessConfig{} : load_train_config(o.config).preprocess, ckpt.spec.input);
  const ImageBuffer img = match_channels(preprocess::run_pipeline(load_image(source), pre).image, ckpt.spec.input.channels);
  const explain::SaliencyMap map = explain::occlusion_saliency(ckpt.spec, ckpt.params, img, o.patch, o.stride);
  fs::create_directories(ctx.output());
  dataset::write_text_file(ctx.output() / ("saliency_" + o.image + ".csv"), explain::saliency_csv(map));
  save_pnm(explain::saliency_image(map), ctx.output() / ("saliency_" + o.image + ".pgm"));
  ctx.out << "baseline=" << format_double(map.baseline) << " grid=" << map.height << "x" << map.width << "\n";
  ctx.record = {{"image", o.image}, {"ckpt", o.ckpt}, {"patch", o.patch}, {"stride", o.stride}};
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkOpts {
  std::string config;
  std::size_t epochs = 3;
  std::size_t synthetic = 0;
  std::size_t size = 64;
  std::string hardware;
};

void run_benchmark(Context& ctx, const BenchmarkOpts& o) {
  train::TrainConfig cfg;
  if (!o.config.empty()) cfg = load_train_config(o.config);
  if (ctx.g.seed_given) cfg.seed = ctx.g.seed;
  std::vector<Sample> samples;
  nn::ModelSpec spec;
  if (o.synthetic > 0) {
    cfg.preprocess.target_height = cfg.preprocess.target_width = o.size;
    spec = load_spec(cfg);
    samples = fixture::make_samples(o.synthetic / 2, o.synthetic - o.synthetic / 2, o.size, cfg.seed);
  } else {
    if (cfg.manifest_path.empty()) fail(ErrorCode::InvalidArgument, "benchmark needs --synthetic N or a config with manifest_path");
    spec = load_spec(cfg);
    const fs::path images = cfg.data_dir.empty() ? ctx.image_dir("") : cfg.data_dir / "images";
    const dataset::DatasetManifest m = read_manifest(cfg.manifest_path, images);
    samples = load_samples(m, dataset::Split::Train, sized(cfg.preprocess, spec.input), spec.input, cfg.preprocessed_dir);
  }
  cfg.balance = false;
  const std::string note = o.hardware.empty()
                               ? std::to_string(std::thread::hardware_concurrency()) + " hardware threads, " +
                                     std::to_string(thread_count()) + " used"
                               : o.hardware;
  const eval::TimingReport t = eval::benchmark_epoch(spec, cfg, samples, o.epochs, note);
  fs::create_directories(ctx.output());
  dataset::write_text_file(ctx.output() / "timing.txt", eval::format_timing(t));
  ctx.out << eval::format_timing(t);
  ctx.record = {{"epochs", o.epochs}, {"synthetic", o.synthetic}, {"size", o.size}};
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::NonFiniteValue:
      return kNumeric;
    case ErrorCode::InvalidArgument:
      return kUsage;
    default:
      return kData;
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{{}, args, out, err};
  if (const char* env = std::getenv("DERM_DATA_DIR")) ctx.g.data_dir = env;

  CLI::App app{"Binary nv-vs-mel dermoscopy classifier", "dermnet"};
  app.require_subcommand(1);
  app.fallthrough();
  auto* seed_opt = app.add_option("--seed", ctx.g.seed, "Seed for every random stream");
  app.add_option("--threads", ctx.g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--data-dir", ctx.g.data_dir, "Dataset root (default: $DERM_DATA_DIR)");
  app.add_option("--output-dir", ctx.g.output_dir, "Directory for every output")->capture_default_str();

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Read metadata.csv into a manifest");
  c_ingest->add_option("--metadata", ingest.metadata, "Metadata CSV (default: <data-dir>/metadata.csv)");
  c_ingest->add_option("--image-dir", ingest.image_dir, "Image directory (default: <data-dir>/images)");
  c_ingest->add_option("--exclude", ingest.exclude, "File of image ids to drop");
  c_ingest->add_flag("--quality", ingest.quality, "Reject low-contrast, blurry or artifact-heavy images");

  SplitOpts split;
  auto* c_split = app.add_subcommand("split", "Stratified train/val/test split");
  c_split->add_option("--manifest", split.manifest, "Input manifest (default: <output-dir>/manifest.csv)");
  c_split->add_option("--train", split.train, "Train fraction")->capture_default_str();
  c_split->add_option("--val", split.val, "Validation fraction")->capture_default_str();
  c_split->add_option("--test", split.test, "Test fraction")->capture_default_str();

  PreprocessOpts pre;
  auto* c_pre = app.add_subcommand("preprocess", "Remove reflections, denoise, resize, normalize");
  c_pre->add_option("--manifest", pre.manifest, "Manifest (default: <output-dir>/split.csv)");
  c_pre->add_option("--image-dir", pre.image_dir, "Image directory (default: <data-dir>/images)");
  c_pre->add_option("--config", pre.config, "Train config supplying preprocess.* keys");
  c_pre->add_option("--size", pre.size, "Output side length");

  PreviewOpts preview;
  auto* c_preview = app.add_subcommand("augment-preview", "Write augmented variants of one image");
  c_preview->add_option("--image", preview.image, "Image id")->required();
  c_preview->add_option("--count", preview.count, "Number of variants")->capture_default_str();
  c_preview->add_option("--manifest", preview.manifest, "Manifest used to resolve the id");
  c_preview->add_option("--image-dir", preview.image_dir, "Image directory (default: <data-dir>/images)");

  TrainOpts tr;
  auto* c_train = app.add_subcommand("train", "Train from a key=value config");
  c_train->add_option("--config", tr.config, "Config file")->required();

  EvaluateOpts ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score one split and write a metrics report");
  c_eval->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  c_eval->add_option("--manifest", ev.manifest, "Split manifest")->required();
  c_eval->add_option("--split", ev.split, "train, val or test")->capture_default_str();
  c_eval->add_option("--image-dir", ev.image_dir, "Image directory (default: <data-dir>/images)");
  c_eval->add_option("--preprocessed-dir", ev.preprocessed_dir, "Tensors written by preprocess");
  c_eval->add_option("--config", ev.config, "Train config supplying preprocess.* keys");
  c_eval->add_option("--threshold", ev.threshold, "Decision threshold")->capture_default_str();

  PredictOpts pr;
  auto* c_predict = app.add_subcommand("predict", "Malignancy probability for image files");
  c_predict->add_option("--ckpt", pr.ckpt, "Checkpoint")->required();
  c_predict->add_option("images", pr.images, "Image files")->required();
  c_predict->add_option("--config", pr.config, "Train config supplying preprocess.* keys");
  c_predict->add_option("--threshold", pr.threshold, "Decision threshold")->capture_default_str();

  SaliencyOpts sal;
  auto* c_sal = app.add_subcommand("saliency", "Occlusion saliency map for one image");
  c_sal->add_option("--image", sal.image, "Image id")->required();
  c_sal->add_option("--ckpt", sal.ckpt, "Checkpoint")->required();
  c_sal->add_option("--manifest", sal.manifest, "Manifest used to resolve the id");
  c_sal->add_option("--image-dir", sal.image_dir, "Image directory (default: <data-dir>/images)");
  c_sal->add_option("--config", sal.config, "Train config supplying preprocess.* keys");
  c_sal->add_option("--patch", sal.patch, "Occlusion patch size")->capture_default_str();
  c_sal->add_option("--stride", sal.stride, "Occlusion stride")->capture_default_str();

  BenchmarkOpts bench;
  auto* c_bench = app.add_subcommand("benchmark", "Time training epochs");
  c_bench->add_option("--config", bench.config, "Train config");
  c_bench->add_option("--epochs", bench.epochs, "Timed epochs after one warmup")->capture_default_str()->check(CLI::PositiveNumber);
  c_bench->add_option("--synthetic", bench.synthetic, "Use N synthetic blob images instead of a manifest");
  c_bench->add_option("--size", bench.size, "Synthetic image size")->capture_default_str();
  c_bench->add_option("--hardware", bench.hardware, "Hardware description for the report");

  if (args.empty()) {
    err << app.help();
    return kUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  ctx.g.seed_given = seed_opt->count() > 0;
  set_thread_count(static_cast<std::size_t>(ctx.g.threads));

  CLI::App* sub = app.get_subcommands().front();
  try {
    const std::string name = sub->get_name();
    if (name == "ingest") run_ingest(ctx, ingest);
    else if (name == "split") run_split(ctx, split);
    else if (name == "preprocess") run_preprocess(ctx, pre);
    else if (name == "augment-preview") run_augment_preview(ctx, preview);
    else if (name == "train") run_train(ctx, tr);
    else if (name == "evaluate") run_evaluate(ctx, ev);
    else if (name == "predict") run_predict(ctx, pr);
    else if (name == "saliency") run_saliency(ctx, sal);
    else if (name == "benchmark") run_benchmark(ctx, bench);
    write_run_record(ctx, name);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

}  // namespace derm::cli
