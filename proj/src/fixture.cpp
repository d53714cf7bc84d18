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
#include "dermnet/fixture.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "dermnet/dataset.hpp"
#include "dermnet/parallel.hpp"
#include "dermnet/rng.hpp"

namespace derm::fixture {

namespace {

constexpr double kSkin[3] = {0.40, 0.33, 0.30};
constexpr double kBright = 0.75;
constexpr double kDark = 0.10;
constexpr double kNoise = 0.02;

std::string sample_id(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn_%05llu", static_cast<unsigned long long>(index));
  return buf;
}

}  // namespace

ImageBuffer blob_image(std::size_t size, bool positive, std::uint64_t seed, std::uint64_t index, BlobInfo* info) {
  CounterRng rng(seed, Stream::Fixture, index);
  const double s = static_cast<double>(size);
  BlobInfo blob;
  blob.radius = rng.uniform(s / 6.0, s / 4.0);
  blob.cy = rng.uniform(blob.radius, s - 1.0 - blob.radius);
  blob.cx = rng.uniform(blob.radius, s - 1.0 - blob.radius);
  const double level = positive ? kBright : kDark;

  ImageBuffer img(size, size, 3);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = static_cast<double>(y) - blob.cy, dx = static_cast<double>(x) - blob.cx;
      const bool inside = dy * dy + dx * dx <= blob.radius * blob.radius;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = (inside ? level : kSkin[c]) + kNoise * rng.normal();
        img.at(y, x, c) = std::clamp(v, 0.0, 0.85);
      }
    }
  }
  if (info) *info = blob;
  return img;
}

std::vector<Sample> make_samples(std::size_t n_positive, std::size_t n_negative, std::size_t size, std::uint64_t seed,
                                 std::uint64_t first_index) {
  std::vector<Sample> out(n_positive + n_negative);
  parallel_for(out.size(), [&](std::size_t i) {
    const bool positive = i < n_positive;
    const std::uint64_t index = first_index + i;
    out[i] = to_sample(blob_image(size, positive, seed, index), sample_id(index), positive ? 1 : 0);
  });
  return out;
}

void write_dataset(const std::filesystem::path& dir, std::size_t n_positive, std::size_t n_negative, std::size_t size,
                   std::uint64_t seed) {
  const std::filesystem::path images = dir / "images";
  std::filesystem::create_directories(images);
  const std::size_t n = n_positive + n_negative;
  parallel_for(n, [&](std::size_t i) {
    save_jpeg(blob_image(size, i < n_positive, seed, i), images / (sample_id(i) + ".jpg"));
  });
  std::ostringstream csv;
  csv << "lesion_id,image_id,dx,dx_type,age,sex,localization\n";
  for (std::size_t i = 0; i < n; ++i) {
    char lesion[32];
    std::snprintf(lesion, sizeof lesion, "SYN_%07zu", i);
    csv << lesion << ',' << sample_id(i) << ',' << (i < n_positive ? "mel" : "nv") << ",synthetic,50.0,unknown,back\n";
  }
  dataset::write_text_file(dir / "metadata.csv", csv.str());
}

}  // namespace derm::fixture
