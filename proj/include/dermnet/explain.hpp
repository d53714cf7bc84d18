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
#include <string>
#include <vector>

#include "dermnet/image.hpp"
#include "dermnet/model.hpp"

namespace derm::explain {

/// Grid of probability drops, one cell per occlusion position.
struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t patch = 0;
  std::size_t stride = 0;
  double baseline = 0.0;
  std::vector<double> values;  // row-major

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  bool operator==(const SaliencyMap&) const = default;
};

/// Slides a patch x patch square of `fill` (default: mean pixel value) over
/// the image and records baseline - occluded probability per position.
/// The image must already match the model input (H x W x C).
SaliencyMap occlusion_saliency(const nn::ModelSpec& spec, const nn::Parameters& params, const ImageBuffer& image,
                               std::size_t patch = 8, std::size_t stride = 4, std::optional<double> fill = std::nullopt);

/// One CSV row per grid row.
std::string saliency_csv(const SaliencyMap& map);

/// Min-max scaled single-channel image; a flat map becomes all zeros.
ImageBuffer saliency_image(const SaliencyMap& map);

}  // namespace derm::explain
