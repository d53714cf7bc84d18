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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dermnet/image.hpp"

namespace derm::dataset {

enum class Label : int { Benign = 0, Malignant = 1, Undetermined = -1 };

enum class Split { Train, Val, Test };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct SampleRecord {
  std::string image_id;
  std::string lesion_id;
  std::string diagnosis_code;
  Label label = Label::Undetermined;
  std::filesystem::path image_path;

  bool operator==(const SampleRecord&) const = default;
};

/// nv -> Benign, mel -> Malignant, anything else -> Undetermined.
/// Case-insensitive, surrounding whitespace ignored.
Label encode_label(std::string_view diagnosis_code);

/// Parses HAM10000-style metadata. Needs image_id, lesion_id and dx columns;
/// the image path is image_dir / (image_id + ".jpg").
std::vector<SampleRecord> parse_metadata(std::string_view csv_text, const std::filesystem::path& image_dir);

struct SplitConfig {
  double train_frac = 0.7;
  double val_frac = 0.2;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::map<std::string, Split> split_of;

  std::vector<const SampleRecord*> in_split(Split s) const;
  std::size_t count(Split s, Label label) const;
};

/// Per-split totals: floor of N * fraction, remainder units to the largest
/// fractional parts (ties in train, val, test order).
std::array<std::size_t, 3> split_totals(std::size_t n, const SplitConfig& cfg);

/// Stratified split of the Benign and Malignant records. Each class is
/// sorted by image_id and shuffled with the seed; per-class counts are
/// floors of n_class * fraction, with remainder units handed out class by
/// class (Benign first) to the split with the largest fractional part that
/// still needs units to reach split_totals.
DatasetManifest split(const DatasetManifest& manifest, const SplitConfig& cfg);

/// Manifest lines: image_id,lesion_id,dx,label,split with label in {0,1,-1}
/// and split in {train,val,test,-}. Image paths are rebuilt from image_dir.
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& image_dir);

/// One image_id per line; '#' starts a comment.
std::set<std::string> parse_exclusion_list(std::string_view text);
std::vector<SampleRecord> apply_exclusions(std::vector<SampleRecord> records, const std::set<std::string>& excluded);

enum class RejectReason { None, LowContrast, Blurry, ArtifactHeavy };
std::string_view to_string(RejectReason r);

struct QualityThresholds {
  /// Laplacian variance on [0,1] grayscale; 100 on the 0-255 scale.
  double min_sharpness = 100.0 / (255.0 * 255.0);
  /// q99 - q1 of grayscale values.
  double min_contrast = 0.1;
  /// Fraction of pixels flagged by the reflection detector.
  double max_artifact_fraction = 0.25;
};

struct QualityReport {
  std::string image_id;
  bool kept = true;
  RejectReason reject_reason = RejectReason::None;
  double sharpness_score = 0.0;
  double contrast_score = 0.0;
};

double laplacian_variance(const ImageBuffer& gray);
double quantile_range(const ImageBuffer& gray, double lo = 0.01, double hi = 0.99);

/// Checks run in order: contrast, sharpness, artifacts; the first failure wins.
QualityReport quality_filter(const ImageBuffer& image, const QualityThresholds& thresholds,
                             std::string image_id = {});

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace derm::dataset
