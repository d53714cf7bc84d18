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
#include <doctest.h>

#include <map>
#include <set>

#include "dermnet/augment.hpp"
#include "dermnet/parallel.hpp"
#include "helpers.hpp"

using namespace derm;
using namespace derm::augment;

namespace {

ImageBuffer noise_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  ImageBuffer img(h, w, c);
  CounterRng rng(seed);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

ImageBuffer disk(std::size_t n, double r) {
  ImageBuffer img(n, n, 1);
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
      img.at(y, x) = dy * dy + dx * dx <= r * r ? 1.0 : 0.0;
    }
  return img;
}

AugmentConfig zero_config() {
  AugmentConfig cfg;
  cfg.rotation_range = cfg.height_shift_range = cfg.width_shift_range = 0.0;
  cfg.shear_range = cfg.zoom_range = cfg.channel_shift_range = 0.0;
  cfg.horizontal_flip = false;
  return cfg;
}

dataset::DatasetManifest manifest_with(std::size_t benign, std::size_t malignant, std::size_t other_split_malignant) {
  dataset::DatasetManifest m;
  auto add = [&](const std::string& id, dataset::Label l, dataset::Split s) {
    m.records.push_back({id, "L" + id, l == dataset::Label::Benign ? "nv" : "mel", l, {}});
    m.split_of[id] = s;
  };
  for (std::size_t i = 0; i < benign; ++i) add("b" + std::to_string(i), dataset::Label::Benign, dataset::Split::Train);
  for (std::size_t i = 0; i < malignant; ++i) add("m" + std::to_string(i), dataset::Label::Malignant, dataset::Split::Train);
  for (std::size_t i = 0; i < other_split_malignant; ++i) {
    add("v" + std::to_string(i), dataset::Label::Malignant, i % 2 ? dataset::Split::Val : dataset::Split::Test);
  }
  return m;
}

}  // namespace

TEST_CASE("zero ranges give identity params") {
  const AugmentParams p = sample_params(zero_config(), 3, 9);
  CHECK(p == AugmentParams{});
}

TEST_CASE("params are a pure function of seed and index") {
  const AugmentConfig cfg;
  CHECK(sample_params(cfg, 5, 17) == sample_params(cfg, 5, 17));
  CHECK_FALSE(sample_params(cfg, 5, 17) == sample_params(cfg, 5, 18));
  CHECK_FALSE(sample_params(cfg, 5, 17) == sample_params(cfg, 6, 17));
}

TEST_CASE("params stay inside their intervals") {
  const AugmentConfig cfg;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const AugmentParams p = sample_params(cfg, 1, i);
    CHECK(std::abs(p.angle) <= 10.0);
    CHECK(std::abs(p.dy) <= 0.2);
    CHECK(std::abs(p.dx) <= 0.2);
    CHECK(std::abs(p.shear) <= 0.2);
    CHECK(p.zoom >= 0.8);
    CHECK(p.zoom <= 1.2);
    for (double d : p.channel_delta) CHECK(std::abs(d) <= 10.0 / 255.0);
  }
}

TEST_CASE("rotation angle is uniform on [-10, 10]") {
  const AugmentConfig cfg;
  double sum = 0.0, lo = 1e9, hi = -1e9;
  int flips = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const AugmentParams p = sample_params(cfg, 77, static_cast<std::uint64_t>(i));
    sum += p.angle;
    lo = std::min(lo, p.angle);
    hi = std::max(hi, p.angle);
    flips += p.flip;
  }
  CHECK(std::abs(sum / n) <= 0.5);
  CHECK(lo >= -10.0);
  CHECK(lo <= -9.0);
  CHECK(hi >= 9.0);
  CHECK(hi <= 10.0);
  CHECK(std::abs(flips - n / 2) < 300);
}

TEST_CASE("flip disabled never flips") {
  AugmentConfig cfg;
  cfg.horizontal_flip = false;
  for (std::uint64_t i = 0; i < 500; ++i) CHECK_FALSE(sample_params(cfg, 2, i).flip);
}

TEST_CASE("identity params are the exact identity") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ImageBuffer img = noise_image(13 + seed, 10 + 2 * seed, seed % 2 ? 3 : 1, seed);
    CHECK(apply(img, AugmentParams{}) == img);
  }
}

TEST_CASE("horizontal flip is an involution and mirrors columns") {
  AugmentParams flip;
  flip.flip = true;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ImageBuffer img = noise_image(9 + seed, 8 + seed, 3, seed);
    const ImageBuffer once = apply(img, flip);
    CHECK(apply(once, flip) == img);
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x) CHECK(once.at(y, x, 1) == img.at(y, img.width() - 1 - x, 1));
  }
}

TEST_CASE("a 10 degree rotation barely changes a centred disk") {
  const std::size_t n = 64;
  const double r = 20.0;
  const ImageBuffer d = disk(n, r);
  AugmentParams p;
  p.angle = 10.0;
  const ImageBuffer rot = apply(d, p);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < d.data().size(); ++i) mismatched += (rot.data()[i] >= 0.5) != (d.data()[i] >= 0.5);
  CHECK(static_cast<double>(mismatched) < 0.05 * std::numbers::pi * r * r);
}

TEST_CASE("translation moves content by dx * W") {
  ImageBuffer img(8, 10, 1);
  img.at(4, 3) = 1.0;
  AugmentParams p;
  p.dx = 0.2;  // two columns right
  const ImageBuffer out = apply(img, p);
  CHECK(out.at(4, 5) == 1.0);
  CHECK(out.at(4, 3) == 0.0);
}

TEST_CASE("out-of-support pixels take the nearest edge value") {
  ImageBuffer img(6, 6, 1);
  for (std::size_t y = 0; y < 6; ++y) img.at(y, 0) = 0.7;
  AugmentParams p;
  p.dx = 0.5;
  const ImageBuffer out = apply(img, p);
  for (std::size_t y = 0; y < 6; ++y) CHECK(out.at(y, 0) == 0.7);
}

TEST_CASE("channel delta is added per channel and clamped") {
  ImageBuffer img(3, 3, 3, 0.5);
  img.at(0, 0, 0) = 0.99;
  AugmentParams p;
  p.channel_delta = {0.02, -0.01, 0.0};
  const ImageBuffer out = apply(img, p);
  CHECK(out.at(1, 1, 0) == doctest::Approx(0.52));
  CHECK(out.at(1, 1, 1) == doctest::Approx(0.49));
  CHECK(out.at(1, 1, 2) == 0.5);
  CHECK(out.at(0, 0, 0) == 1.0);
}

TEST_CASE("augmented output stays in range") {
  const AugmentConfig cfg;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const ImageBuffer img = noise_image(16, 16, 3, i);
    CHECK(apply(img, sample_params(cfg, 4, i)).valid_range());
  }
}

TEST_CASE("batch augmentation does not depend on thread count") {
  const AugmentConfig cfg;
  std::vector<ImageBuffer> images;
  std::vector<AugmentParams> params;
  for (std::uint64_t i = 0; i < 24; ++i) {
    images.push_back(noise_image(20, 20, 3, i));
    params.push_back(sample_params(cfg, 9, i));
  }
  set_thread_count(1);
  const auto a = apply_batch(images, params);
  set_thread_count(8);
  const auto b = apply_batch(images, params);
  set_thread_count(0);
  CHECK(a == b);
  for (std::size_t i = 0; i < images.size(); ++i) CHECK(a[i] == apply(images[i], params[i]));
}

TEST_CASE("pca shift: sigma zero and constant images are unchanged") {
  const ImageBuffer img = noise_image(10, 10, 3, 1);
  CHECK(pca_color_shift(img, 5, 0.0) == img);
  const ImageBuffer c(8, 8, 3, 0.3);
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(pca_color_shift(c, s, 0.5) == c);
  CHECK_ERROR(pca_color_shift(ImageBuffer(4, 4, 1), 1, 0.1), ErrorCode::NotRGB);
}

TEST_CASE("pca of a gray-valued image points along (1,1,1)") {
  ImageBuffer img(12, 12, 3);
  CounterRng rng(3);
  for (std::size_t y = 0; y < 12; ++y)
    for (std::size_t x = 0; x < 12; ++x) {
      const double v = rng.uniform();
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = v;
    }
  const ColorPca pca = rgb_pca(img);
  const auto& v = pca.eigenvectors[2];
  const double inv = 1.0 / std::sqrt(3.0);
  const double cosine = std::abs(v[0] * inv + v[1] * inv + v[2] * inv);
  CHECK(cosine == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pca.eigenvalues[0] < 1e-12);
  CHECK(pca.eigenvalues[2] > 0.0);
}

TEST_CASE("pca shift is seeded and in range") {
  const ImageBuffer img = noise_image(10, 10, 3, 2);
  CHECK(pca_color_shift(img, 7, 0.1) == pca_color_shift(img, 7, 0.1));
  CHECK_FALSE(pca_color_shift(img, 7, 0.1) == pca_color_shift(img, 8, 0.1));
  CHECK(pca_color_shift(img, 7, 3.0).valid_range());
}

TEST_CASE("balance fills the minority class") {
  const AugmentConfig cfg;
  CHECK(balance(manifest_with(5, 5, 0), cfg, 1).empty());

  std::vector<BalanceItem> pool;
  for (int i = 0; i < 6136; ++i) pool.push_back({"b" + std::to_string(i), dataset::Label::Benign});
  for (int i = 0; i < 979; ++i) pool.push_back({"m" + std::to_string(i), dataset::Label::Malignant});
  const auto plan = balance(pool, cfg, 3);
  CHECK(plan.size() == 5157);
  CHECK(std::all_of(plan.begin(), plan.end(), [](const PlanEntry& e) { return e.source_image_id[0] == 'm'; }));
  std::map<std::string, int> uses;
  for (const auto& e : plan) ++uses[e.source_image_id];
  CHECK(uses.size() == 979);
  for (const auto& [id, n] : uses) CHECK((n == 5 || n == 6));
}

TEST_CASE("balance is deterministic and uses training images only") {
  const dataset::DatasetManifest m = manifest_with(20, 6, 10);
  const auto a = balance(m, AugmentConfig{}, 11);
  const auto b = balance(m, AugmentConfig{}, 11);
  CHECK(format_plan(a) == format_plan(b));
  CHECK(a.size() == 14);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].params == b[i].params);
    CHECK(a[i].seed_index == i);
    CHECK(a[i].source_image_id[0] == 'm');
  }
  std::set<std::string> sources;
  for (const auto& e : a) sources.insert(e.source_image_id);
  for (const auto* r : m.in_split(dataset::Split::Val)) CHECK(sources.count(r->image_id) == 0);
  for (const auto* r : m.in_split(dataset::Split::Test)) CHECK(sources.count(r->image_id) == 0);
  CHECK_ERROR(balance(manifest_with(4, 0, 3), AugmentConfig{}, 1), ErrorCode::EmptyClass);
}

TEST_CASE("plan lines are source,seed_index") {
  const auto plan = balance(manifest_with(3, 1, 0), AugmentConfig{}, 1);
  CHECK(format_plan(plan) == "m0,0\nm0,1\n");
}

TEST_CASE("config validation") {
  AugmentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rotation_range = -1.0;
  CHECK_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
  cfg = {};
  cfg.zoom_range = 1.0;
  CHECK_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
}
