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

// Glue between manifests on disk and the in-memory samples the network
// consumes.

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dermnet/dataset.hpp"
#include "dermnet/image.hpp"
#include "dermnet/model.hpp"
#include "dermnet/preprocess.hpp"

namespace derm {

/// A preprocessed image in CHW order with its binary label.
struct Sample {
  std::string image_id;
  int label = 0;
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<float> chw;

  bool operator==(const Sample&) const = default;
};

Sample to_sample(const ImageBuffer& hwc, std::string image_id, int label);
ImageBuffer to_image(const Sample& s);

/// Stacks samples[indices] into an [N, C, H, W] tensor plus [N] labels.
nn::Tensor make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices, nn::Tensor* labels = nullptr);
nn::Tensor make_batch(std::span<const Sample> samples, nn::Tensor* labels = nullptr);

/// Matches the channel count the model expects (RGB <-> gray).
ImageBuffer match_channels(const ImageBuffer& img, std::size_t channels);

using ImageLoader = std::function<ImageBuffer(const dataset::SampleRecord&)>;

/// Decodes record.image_path.
ImageLoader file_loader();

/// Reads <dir>/<image_id>.dcnt tensors written by the preprocess command.
ImageLoader tensor_loader(const std::filesystem::path& dir);

/// Loads and preprocesses every labeled record of one split in parallel,
/// in manifest order. Raw images go through run_pipeline sized to the model
/// input; `already_preprocessed` skips that for tensor_loader output.
std::vector<Sample> load_split(const dataset::DatasetManifest& manifest, dataset::Split split,
                               const preprocess::PreprocessConfig& cfg, const nn::InputShape& input,
                               const ImageLoader& loader, bool already_preprocessed = false);

}  // namespace derm
