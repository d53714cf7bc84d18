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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dermnet/dataset.hpp"
#include "dermnet/image.hpp"

namespace derm::augment {

enum class FillMode { Nearest };

struct AugmentConfig {
  double rotation_range = 10.0;      // degrees
  double height_shift_range = 0.2;   // fraction of height
  double width_shift_range = 0.2;    // fraction of width
  double shear_range = 0.2;          // shear angle, radians
  double zoom_range = 0.2;           // zoom in [1 - z, 1 + z]
  double channel_shift_range = 10.0; // 0-255 intensity units
  bool horizontal_flip = true;
  FillMode fill_mode = FillMode::Nearest;

  void validate() const;
};

struct AugmentParams {
  double angle = 0.0;  // degrees
  double dy = 0.0;     // fraction of height
  double dx = 0.0;     // fraction of width
  double shear = 0.0;  // radians
  double zoom = 1.0;
  std::array<double, 3> channel_delta{0.0, 0.0, 0.0};  // [0,1] units
  bool flip = false;

  bool operator==(const AugmentParams&) const = default;
};

/// Draws every field uniformly from its interval. The stream is keyed by
/// (seed, index) so any sample can be regenerated on its own.
AugmentParams sample_params(const AugmentConfig& cfg, std::uint64_t seed, std::uint64_t index);

/// Flip, rotate, shear, zoom about the image centre, then translate by
/// (dy * H, dx * W). Output pixels are sampled bilinearly through the
/// inverse map with coordinates clamped to the image (nearest fill), then
/// shifted per channel and clamped to [0, 1].
ImageBuffer apply(const ImageBuffer& img, const AugmentParams& p);

/// Applies params[i] to images[i] in parallel; output order matches input.
std::vector<ImageBuffer> apply_batch(std::span<const ImageBuffer> images, std::span<const AugmentParams> params);

struct ColorPca {
  std::array<double, 3> eigenvalues{};                 // ascending
  std::array<std::array<double, 3>, 3> eigenvectors{}; // eigenvectors[i] pairs with eigenvalues[i]
};

/// Eigendecomposition of the 3x3 RGB covariance over all pixels.
ColorPca rgb_pca(const ImageBuffer& img);

/// Adds sum_i a_i * lambda_i * v_i to every pixel with a_i ~ N(0, sigma)
/// drawn once from alpha_seed, then clamps.
ImageBuffer pca_color_shift(const ImageBuffer& img, std::uint64_t alpha_seed, double sigma);

struct PlanEntry {
  std::string source_image_id;
  std::uint64_t seed_index = 0;
  AugmentParams params;
};

struct BalanceItem {
  std::string image_id;
  dataset::Label label;
};

/// Oversampling plan that brings the minority class of `train` up to the
/// majority count. Sources cycle through the minority images in a seeded
/// shuffle of their sorted ids; entry i uses sample_params(cfg, seed, i).
std::vector<PlanEntry> balance(std::span<const BalanceItem> train, const AugmentConfig& cfg, std::uint64_t seed);

/// Same plan built from the training split of a manifest only.
std::vector<PlanEntry> balance(const dataset::DatasetManifest& manifest, const AugmentConfig& cfg, std::uint64_t seed);

/// Lines "source_image_id,seed_index".
std::string format_plan(std::span<const PlanEntry> plan);

}  // namespace derm::augment
