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
#include "dermnet/pipeline.hpp"

#include "dermnet/checkpoint.hpp"
#include "dermnet/error.hpp"
#include "dermnet/parallel.hpp"

namespace derm {

Sample to_sample(const ImageBuffer& hwc, std::string image_id, int label) {
  Sample s{std::move(image_id), label, hwc.channels(), hwc.height(), hwc.width(), {}};
  s.chw.resize(hwc.data().size());
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t y = 0; y < s.height; ++y)
      for (std::size_t x = 0; x < s.width; ++x)
        s.chw[(c * s.height + y) * s.width + x] = static_cast<float>(hwc.at(y, x, c));
  return s;
}

ImageBuffer to_image(const Sample& s) {
  ImageBuffer img(s.height, s.width, s.channels);
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t y = 0; y < s.height; ++y)
      for (std::size_t x = 0; x < s.width; ++x) img.at(y, x, c) = s.chw[(c * s.height + y) * s.width + x];
  return img;
}

nn::Tensor make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices, nn::Tensor* labels) {
  if (indices.empty()) fail(ErrorCode::Empty, "batch is empty");
  const Sample& first = samples[indices[0]];
  const std::size_t per = first.chw.size();
  nn::Tensor batch({indices.size(), first.channels, first.height, first.width});
  if (labels) *labels = nn::Tensor({indices.size()});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Sample& s = samples[indices[b]];
    if (s.chw.size() != per) fail(ErrorCode::ShapeMismatch, "sample " + s.image_id + " has a different shape");
    std::copy(s.chw.begin(), s.chw.end(), batch.raw() + b * per);
    if (labels) (*labels)[b] = static_cast<double>(s.label);
  }
  return batch;
}

nn::Tensor make_batch(std::span<const Sample> samples, nn::Tensor* labels) {
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(samples, all, labels);
}

ImageBuffer match_channels(const ImageBuffer& img, std::size_t channels) {
  if (img.channels() == channels) return img;
  if (channels == 1) return preprocess::to_grayscale(img);
  if (channels == 3 && img.channels() == 1) {
    ImageBuffer out(img.height(), img.width(), 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
      for (std::size_t c = 0; c < 3; ++c) out.data()[3 * i + c] = img.data()[i];
    return out;
  }
  fail(ErrorCode::UnsupportedChannelCount, "cannot convert " + std::to_string(img.channels()) + " channels to " + std::to_string(channels));
}

ImageLoader file_loader() {
  return [](const dataset::SampleRecord& r) { return load_image(r.image_path); };
}

ImageLoader tensor_loader(const std::filesystem::path& dir) {
  return [dir](const dataset::SampleRecord& r) { return nn::load_image_tensor(dir / (r.image_id + ".dcnt")); };
}

std::vector<Sample> load_split(const dataset::DatasetManifest& manifest, dataset::Split split,
                               const preprocess::PreprocessConfig& cfg, const nn::InputShape& input,
                               const ImageLoader& loader, bool already_preprocessed) {
  const std::vector<const dataset::SampleRecord*> records = manifest.in_split(split);
  preprocess::PreprocessConfig sized = cfg;
  sized.target_height = input.height;
  sized.target_width = input.width;
  std::vector<Sample> out(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    const dataset::SampleRecord& r = *records[i];
    ImageBuffer img = loader(r);
    if (!already_preprocessed) img = preprocess::run_pipeline(img, sized).image;
    if (img.height() != input.height || img.width() != input.width) {
      fail(ErrorCode::ShapeMismatch, "image " + r.image_id + " is " + std::to_string(img.height()) + "x" +
                                         std::to_string(img.width()) + ", model expects " + std::to_string(input.height) +
                                         "x" + std::to_string(input.width));
    }
    out[i] = to_sample(match_channels(img, input.channels), r.image_id, static_cast<int>(r.label));
  });
  return out;
}

}  // namespace derm
