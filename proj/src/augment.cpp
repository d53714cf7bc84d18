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
#include "dermnet/augment.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dermnet/error.hpp"
#include "dermnet/parallel.hpp"
#include "dermnet/rng.hpp"

namespace derm::augment {

namespace {

using Mat2 = std::array<double, 4>;  // row-major

Mat2 mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

double sample_bilinear(const ImageBuffer& img, double sy, double sx, std::size_t c) {
  sy = std::clamp(sy, 0.0, static_cast<double>(img.height() - 1));
  sx = std::clamp(sx, 0.0, static_cast<double>(img.width() - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
  const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
  const double fy = sy - static_cast<double>(y0);
  const double fx = sx - static_cast<double>(x0);
  const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
  const double bottom = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
  return (1.0 - fy) * top + fy * bottom;
}

}  // namespace

void AugmentConfig::validate() const {
  for (double r : {rotation_range, height_shift_range, width_shift_range, shear_range, zoom_range, channel_shift_range}) {
    if (!(r >= 0.0) || !std::isfinite(r)) fail(ErrorCode::InvalidArgument, "augmentation ranges must be >= 0");
  }
  if (zoom_range >= 1.0) fail(ErrorCode::InvalidArgument, "zoom_range must be < 1");
}

AugmentParams sample_params(const AugmentConfig& cfg, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(seed, Stream::Augment, index);
  AugmentParams p;
  p.angle = rng.uniform(-cfg.rotation_range, cfg.rotation_range);
  p.dy = rng.uniform(-cfg.height_shift_range, cfg.height_shift_range);
  p.dx = rng.uniform(-cfg.width_shift_range, cfg.width_shift_range);
  p.shear = rng.uniform(-cfg.shear_range, cfg.shear_range);
  p.zoom = rng.uniform(1.0 - cfg.zoom_range, 1.0 + cfg.zoom_range);
  const double shift = cfg.channel_shift_range / 255.0;
  for (double& d : p.channel_delta) d = rng.uniform(-shift, shift);
  const bool coin = rng.coin();
  p.flip = cfg.horizontal_flip && coin;
  return p;
}

ImageBuffer apply(const ImageBuffer& img, const AugmentParams& p) {
  if (img.empty()) fail(ErrorCode::EmptyImage, "cannot augment an empty image");
  const double theta = p.angle * std::numbers::pi / 180.0;
  const Mat2 flip{p.flip ? -1.0 : 1.0, 0.0, 0.0, 1.0};
  const Mat2 rot{std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)};
  const Mat2 shear{1.0, -std::sin(p.shear), 0.0, std::cos(p.shear)};
  const Mat2 zoom{p.zoom, 0.0, 0.0, p.zoom};
  const Mat2 fwd = mul(zoom, mul(shear, mul(rot, flip)));
  const double det = fwd[0] * fwd[3] - fwd[1] * fwd[2];
  if (!(std::fabs(det) > 1e-12)) fail(ErrorCode::InvalidArgument, "augmentation transform is singular");
  const Mat2 inv{fwd[3] / det, -fwd[1] / det, -fwd[2] / det, fwd[0] / det};

  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
  const double ty = p.dy * static_cast<double>(img.height());
  const double tx = p.dx * static_cast<double>(img.width());

  ImageBuffer out(img.height(), img.width(), img.channels());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double ux = static_cast<double>(x) - cx - tx;
      const double uy = static_cast<double>(y) - cy - ty;
      const double sx = inv[0] * ux + inv[1] * uy + cx;
      const double sy = inv[2] * ux + inv[3] * uy + cy;
      for (std::size_t c = 0; c < img.channels(); ++c) {
        const double v = sample_bilinear(img, sy, sx, c) + p.channel_delta[std::min<std::size_t>(c, 2)];
        out.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<ImageBuffer> apply_batch(std::span<const ImageBuffer> images, std::span<const AugmentParams> params) {
  if (images.size() != params.size()) fail(ErrorCode::LengthMismatch, "one params entry per image is required");
  std::vector<ImageBuffer> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = apply(images[i], params[i]); });
  return out;
}

ColorPca rgb_pca(const ImageBuffer& img) {
  if (img.channels() != 3) fail(ErrorCode::NotRGB, "PCA colour shift needs 3 channels");
  if (img.empty()) fail(ErrorCode::EmptyImage, "cannot analyse an empty image");
  const std::size_t n = img.pixel_count();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) mean[c] += img.data()[3 * i + static_cast<std::size_t>(c)];
  mean /= static_cast<double>(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d d;
    for (int c = 0; c < 3; ++c) d[c] = img.data()[3 * i + static_cast<std::size_t>(c)] - mean[c];
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  ColorPca pca;
  for (int i = 0; i < 3; ++i) {
    pca.eigenvalues[static_cast<std::size_t>(i)] = std::max(0.0, solver.eigenvalues()[i]);
    for (int c = 0; c < 3; ++c) {
      pca.eigenvectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = solver.eigenvectors()(c, i);
    }
  }
  return pca;
}

ImageBuffer pca_color_shift(const ImageBuffer& img, std::uint64_t alpha_seed, double sigma) {
  if (img.channels() != 3) fail(ErrorCode::NotRGB, "PCA colour shift needs 3 channels");
  if (sigma == 0.0) return img;
  const ColorPca pca = rgb_pca(img);
  CounterRng rng(alpha_seed, Stream::PcaShift);
  std::array<double, 3> delta{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const double a = sigma * rng.normal();
    for (std::size_t c = 0; c < 3; ++c) delta[c] += a * pca.eigenvalues[i] * pca.eigenvectors[i][c];
  }
  ImageBuffer out = img;
  auto v = out.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i] + delta[i % 3], 0.0, 1.0);
  return out;
}

std::vector<PlanEntry> balance(std::span<const BalanceItem> train, const AugmentConfig& cfg, std::uint64_t seed) {
  std::vector<std::string> benign, malignant;
  for (const auto& item : train) {
    if (item.label == dataset::Label::Benign) benign.push_back(item.image_id);
    if (item.label == dataset::Label::Malignant) malignant.push_back(item.image_id);
  }
  if (benign.empty() || malignant.empty()) fail(ErrorCode::EmptyClass, "balancing needs both classes in the training split");

  std::vector<std::string>& minority = malignant.size() < benign.size() ? malignant : benign;
  const std::size_t majority = std::max(benign.size(), malignant.size());
  const std::size_t deficit = majority - minority.size();
  std::sort(minority.begin(), minority.end());
  CounterRng rng(seed, Stream::Balance);
  shuffle(std::span<std::string>(minority), rng);

  std::vector<PlanEntry> plan;
  plan.reserve(deficit);
  for (std::size_t i = 0; i < deficit; ++i) {
    plan.push_back({minority[i % minority.size()], i, sample_params(cfg, seed, i)});
  }
  return plan;
}

std::vector<PlanEntry> balance(const dataset::DatasetManifest& manifest, const AugmentConfig& cfg, std::uint64_t seed) {
  std::vector<BalanceItem> train;
  for (const dataset::SampleRecord* r : manifest.in_split(dataset::Split::Train)) train.push_back({r->image_id, r->label});
  return balance(train, cfg, seed);
}

std::string format_plan(std::span<const PlanEntry> plan) {
  std::ostringstream out;
  for (const auto& e : plan) out << e.source_image_id << ',' << e.seed_index << '\n';
  return out.str();
}

}  // namespace derm::augment
