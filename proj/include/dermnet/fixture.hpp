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
#include <vector>

#include "dermnet/image.hpp"
#include "dermnet/pipeline.hpp"

// Synthetic lesion images: a noisy skin-toned background with one disk.
// Positives carry a bright disk, negatives a dark one.
namespace derm::fixture {

struct BlobInfo {
  double cy = 0.0, cx = 0.0, radius = 0.0;
};

ImageBuffer blob_image(std::size_t size, bool positive, std::uint64_t seed, std::uint64_t index,
                       BlobInfo* info = nullptr);

/// Image ids are "syn_00000" onwards; positives come first.
std::vector<Sample> make_samples(std::size_t n_positive, std::size_t n_negative, std::size_t size, std::uint64_t seed,
                                 std::uint64_t first_index = 0);

/// Writes <dir>/images/<id>.jpg and a HAM10000-style <dir>/metadata.csv
/// (positives labeled mel, negatives nv).
void write_dataset(const std::filesystem::path& dir, std::size_t n_positive, std::size_t n_negative, std::size_t size,
                   std::uint64_t seed);

}  // namespace derm::fixture
