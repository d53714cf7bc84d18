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

// Binary container shared by checkpoints and preprocessed image tensors:
//
//   "DCNN" | u16 version | u32 header length | header JSON | f32 payloads
//
// All integers and floats are little-endian. The header lists every tensor
// as {"name", "shape"}; payloads follow in that order.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dermnet/adam.hpp"
#include "dermnet/image.hpp"
#include "dermnet/model.hpp"

namespace derm::nn {

constexpr std::uint16_t kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
};

std::string encode_container(const Container& c);
Container decode_container(std::string_view bytes);
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

struct Checkpoint {
  ModelSpec spec;
  Parameters params;
  AdamState adam;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;      // completed epochs
  std::uint64_t iteration = 0;  // completed iterations
  double best_val_loss = std::numeric_limits<double>::infinity();
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint checkpoint_from_container(const Container& c);
Container checkpoint_to_container(const Checkpoint& ckpt);

/// Stores an image as a [H, W, C] tensor.
void save_image_tensor(const std::filesystem::path& path, const ImageBuffer& img, const std::string& image_id);
ImageBuffer load_image_tensor(const std::filesystem::path& path);

}  // namespace derm::nn
