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
#include "dermnet/explain.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dermnet/error.hpp"
#include "dermnet/pipeline.hpp"
#include "dermnet/text.hpp"

namespace derm::explain {

namespace {

constexpr std::size_t kBatch = 64;

}  // namespace

SaliencyMap occlusion_saliency(const nn::ModelSpec& spec, const nn::Parameters& params, const ImageBuffer& image,
                               std::size_t patch, std::size_t stride, std::optional<double> fill) {
  if (stride < 1) fail(ErrorCode::InvalidArgument, "stride must be >= 1");
  if (patch < 1) fail(ErrorCode::InvalidArgument, "patch must be >= 1");
  const std::size_t H = image.height(), W = image.width(), C = image.channels();
  if (H != spec.input.height || W != spec.input.width || C != spec.input.channels) {
    fail(ErrorCode::ShapeMismatch, "image " + std::to_string(H) + "x" + std::to_string(W) + "x" + std::to_string(C) +
                                       " does not match the model input");
  }
  if (patch > std::min(H, W)) {
    fail(ErrorCode::PatchLargerThanImage,
         "patch " + std::to_string(patch) + " exceeds image " + std::to_string(H) + "x" + std::to_string(W));
  }
  const double fill_value =
      fill.value_or(std::accumulate(image.data().begin(), image.data().end(), 0.0) / static_cast<double>(image.data().size()));

  SaliencyMap map;
  map.height = (H - patch) / stride + 1;
  map.width = (W - patch) / stride + 1;
  map.patch = patch;
  map.stride = stride;
  map.values.resize(map.height * map.width);

  const Sample base = to_sample(image, "", 0);
  map.baseline = nn::predict(spec, params, make_batch(std::span<const Sample>(&base, 1)))[0];

  const std::size_t cells = map.values.size();
  for (std::size_t start = 0; start < cells; start += kBatch) {
    const std::size_t end = std::min(cells, start + kBatch);
    std::vector<Sample> occluded(end - start, base);
    for (std::size_t cell = start; cell < end; ++cell) {
      const std::size_t y0 = (cell / map.width) * stride, x0 = (cell % map.width) * stride;
      Sample& s = occluded[cell - start];
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t y = y0; y < y0 + patch; ++y) {
          std::fill_n(s.chw.begin() + static_cast<std::ptrdiff_t>((c * H + y) * W + x0), patch, static_cast<float>(fill_value));
        }
      }
    }
    const nn::Tensor probs = nn::predict(spec, params, make_batch(occluded));
    for (std::size_t cell = start; cell < end; ++cell) map.values[cell] = map.baseline - probs[cell - start];
  }
  return map;
}

std::string saliency_csv(const SaliencyMap& map) {
  std::ostringstream out;
  for (std::size_t y = 0; y < map.height; ++y) {
    for (std::size_t x = 0; x < map.width; ++x) out << (x ? "," : "") << format_double(map.at(y, x));
    out << '\n';
  }
  return out.str();
}

ImageBuffer saliency_image(const SaliencyMap& map) {
  ImageBuffer img(map.height, map.width, 1);
  if (map.values.empty()) return img;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return img;
  for (std::size_t i = 0; i < map.values.size(); ++i) img.data()[i] = (map.values[i] - *lo) / range;
  return img;
}

}  // namespace derm::explain
