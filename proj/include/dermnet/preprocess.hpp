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

// Reflection-artifact detection and removal, denoising, normalization and
// resizing. Every operation takes and returns ImageBuffer by value and
// keeps values finite and inside [0, 1].

#include <cstddef>
#include <variant>
#include <vector>

#include "dermnet/image.hpp"

namespace derm::preprocess {

struct MedianDenoise {
  std::size_t kernel = 3;
};
struct GaussianDenoise {
  std::size_t kernel = 5;
  double sigma = 1.0;
};
struct NoDenoise {};
using DenoiseMethod = std::variant<MedianDenoise, GaussianDenoise, NoDenoise>;

enum class Normalization { MinMax, ZScore, DecimalScaling };

struct PreprocessConfig {
  double t_r1 = 0.87;   // absolute brightness threshold
  double t_r2 = 0.096;  // brightness above the local mean
  std::size_t mean_window = 12;
  DenoiseMethod denoise = MedianDenoise{3};
  Normalization normalize = Normalization::MinMax;
  std::size_t target_height = 64;
  std::size_t target_width = 64;

  /// Throws InvalidArgument when thresholds, window or kernels are out of range.
  void validate() const;
};

/// Row-major flags with the dimensions of the grayscale source.
struct ArtifactMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<bool> flags;

  ArtifactMask() = default;
  ArtifactMask(std::size_t h, std::size_t w) : height(h), width(w), flags(h * w, false) {}

  bool at(std::size_t y, std::size_t x) const { return flags[y * width + x]; }
  std::size_t count() const;
  double fraction() const;
};

ImageBuffer to_grayscale(const ImageBuffer& img);

/// Box mean over a window x window neighbourhood with edge replication.
/// Even windows cover [x - (w-1)/2, x + w/2], i.e. the pixel is the
/// top-left of the two centre cells.
ImageBuffer local_mean(const ImageBuffer& gray, std::size_t window);

/// Flags pixels with I > t_r1 and I - local_mean(I) > t_r2 (both strict).
ArtifactMask detect_reflection(const ImageBuffer& gray, const PreprocessConfig& cfg);

/// Fills flagged pixels from the outside in. Each sweep replaces every
/// flagged pixel that has an unflagged 8-neighbour by the per-channel median
/// of those neighbours and then marks it unflagged. Sweeps read the previous
/// state only, so the result does not depend on visiting order.
ImageBuffer inpaint(const ImageBuffer& img, const ArtifactMask& mask);

ImageBuffer denoise(const ImageBuffer& img, const DenoiseMethod& method);

/// Normalized k x k Gaussian weights (outer product of 1-D weights), row-major.
std::vector<double> gaussian_kernel(std::size_t k, double sigma);

ImageBuffer normalize(const ImageBuffer& img, Normalization method);

/// Bilinear resampling with half-pixel centres and clamped borders.
ImageBuffer resize(const ImageBuffer& img, std::size_t height, std::size_t width);

struct PreprocessResult {
  ImageBuffer image;
  std::size_t flagged_pixels = 0;
  bool inpainted = false;
};

/// detect -> inpaint -> denoise -> resize -> normalize. A mask over the
/// inpaint limit leaves the image un-inpainted and reports it.
PreprocessResult run_pipeline(const ImageBuffer& img, const PreprocessConfig& cfg);

}  // namespace derm::preprocess
