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
#include "dermnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dermnet/error.hpp"

namespace derm::preprocess {

namespace {

void require_gray(const ImageBuffer& img) {
  if (img.channels() != 1) fail(ErrorCode::NotGrayscale, "expected 1 channel, got " + std::to_string(img.channels()));
}

void require_nonempty(const ImageBuffer& img) {
  if (img.empty()) fail(ErrorCode::EmptyImage, "image has no pixels");
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

double median_of(std::vector<double>& values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  if (n % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

void check_kernel(const ImageBuffer& img, std::size_t k) {
  if (k == 0 || k % 2 == 0) fail(ErrorCode::EvenKernel, "kernel size " + std::to_string(k) + " must be odd");
  if (k > std::min(img.height(), img.width())) {
    fail(ErrorCode::KernelLargerThanImage, "kernel " + std::to_string(k) + " exceeds image " +
                                               std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
}

ImageBuffer median_filter(const ImageBuffer& img, std::size_t k) {
  check_kernel(img, k);
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  ImageBuffer out(img.height(), img.width(), img.channels());
  std::vector<double> window;
  window.reserve(k * k);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < img.channels(); ++c) {
        window.clear();
        for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
          const std::size_t yy = clamp_index(static_cast<std::ptrdiff_t>(y) + dy, img.height());
          for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
            window.push_back(img.at(yy, clamp_index(static_cast<std::ptrdiff_t>(x) + dx, img.width()), c));
          }
        }
        out.at(y, x, c) = median_of(window);
      }
    }
  }
  return out;
}

std::vector<double> gaussian_weights_1d(std::size_t k, double sigma) {
  std::vector<double> w(k);
  const double r = static_cast<double>(k / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = static_cast<double>(i) - r;
    w[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

ImageBuffer gaussian_filter(const ImageBuffer& img, std::size_t k, double sigma) {
  check_kernel(img, k);
  if (!(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "gaussian sigma must be positive");
  const std::vector<double> w = gaussian_weights_1d(k, sigma);
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t h = img.height(), wd = img.width(), ch = img.channels();

  ImageBuffer tmp(h, wd, ch);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < wd; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t d = -r; d <= r; ++d) {
          acc += w[static_cast<std::size_t>(d + r)] * img.at(y, clamp_index(static_cast<std::ptrdiff_t>(x) + d, wd), c);
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  ImageBuffer out(h, wd, ch);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < wd; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t d = -r; d <= r; ++d) {
          acc += w[static_cast<std::size_t>(d + r)] * tmp.at(clamp_index(static_cast<std::ptrdiff_t>(y) + d, h), x, c);
        }
        out.at(y, x, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (!(0.0 < t_r2 && t_r2 < t_r1 && t_r1 < 1.0)) {
    fail(ErrorCode::InvalidArgument, "reflection thresholds must satisfy 0 < t_r2 < t_r1 < 1");
  }
  if (mean_window < 1) fail(ErrorCode::InvalidArgument, "mean_window must be >= 1");
  if (target_height < 1 || target_width < 1) fail(ErrorCode::InvalidArgument, "target size must be positive");
  if (const auto* m = std::get_if<MedianDenoise>(&denoise); m && m->kernel % 2 == 0) {
    fail(ErrorCode::EvenKernel, "median kernel must be odd");
  }
  if (const auto* g = std::get_if<GaussianDenoise>(&denoise); g && g->kernel % 2 == 0) {
    fail(ErrorCode::EvenKernel, "gaussian kernel must be odd");
  }
}

std::size_t ArtifactMask::count() const { return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)); }

double ArtifactMask::fraction() const {
  return flags.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(flags.size());
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) {
    fail(ErrorCode::UnsupportedChannelCount, "expected 1 or 3 channels, got " + std::to_string(img.channels()));
  }
  ImageBuffer out(img.height(), img.width(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double v = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

ImageBuffer local_mean(const ImageBuffer& gray, std::size_t window) {
  require_gray(gray);
  if (window < 1) fail(ErrorCode::InvalidArgument, "window must be >= 1");
  if (window > gray.height() || window > gray.width()) {
    fail(ErrorCode::WindowLargerThanImage, "window " + std::to_string(window) + " exceeds image " +
                                               std::to_string(gray.height()) + "x" + std::to_string(gray.width()));
  }
  if (window == 1) return gray;

  const auto lo = static_cast<std::ptrdiff_t>((window - 1) / 2);
  const auto hi = static_cast<std::ptrdiff_t>(window - 1) - lo;
  const std::size_t h = gray.height(), w = gray.width();

  ImageBuffer rows(h, w, 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -lo; d <= hi; ++d) acc += gray.at(y, clamp_index(static_cast<std::ptrdiff_t>(x) + d, w));
      rows.at(y, x) = acc;
    }
  }
  const double inv_area = 1.0 / static_cast<double>(window * window);
  ImageBuffer out(h, w, 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -lo; d <= hi; ++d) acc += rows.at(clamp_index(static_cast<std::ptrdiff_t>(y) + d, h), x);
      out.at(y, x) = std::clamp(acc * inv_area, 0.0, 1.0);
    }
  }
  return out;
}

ArtifactMask detect_reflection(const ImageBuffer& gray, const PreprocessConfig& cfg) {
  require_gray(gray);
  const ImageBuffer avg = local_mean(gray, cfg.mean_window);
  ArtifactMask mask(gray.height(), gray.width());
  auto src = gray.data();
  auto mean = avg.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mask.flags[i] = src[i] > cfg.t_r1 && (src[i] - mean[i]) > cfg.t_r2;
  }
  return mask;
}

ImageBuffer inpaint(const ImageBuffer& img, const ArtifactMask& mask) {
  if (mask.height != img.height() || mask.width != img.width() || mask.flags.size() != img.pixel_count()) {
    fail(ErrorCode::DimensionMismatch, "mask does not match image dimensions");
  }
  if (mask.fraction() > 0.5) {
    fail(ErrorCode::MaskTooLarge, "flagged fraction " + std::to_string(mask.fraction()) + " exceeds 0.5");
  }
  ImageBuffer out = img;
  std::vector<bool> flagged = mask.flags;
  std::size_t remaining = mask.count();
  const std::size_t h = img.height(), w = img.width(), ch = img.channels();

  struct Fill {
    std::size_t index;
    std::vector<double> values;
  };
  std::vector<double> neighbours;
  while (remaining > 0) {
    std::vector<Fill> fills;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t idx = y * w + x;
        if (!flagged[idx]) continue;
        Fill fill{idx, std::vector<double>(ch)};
        bool any = false;
        for (std::size_t c = 0; c < ch; ++c) {
          neighbours.clear();
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (dy == 0 && dx == 0) continue;
              const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
              const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
              if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(h) || xx >= static_cast<std::ptrdiff_t>(w)) continue;
              const auto n = static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx);
              if (!flagged[n]) neighbours.push_back(out.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c));
            }
          }
          if (neighbours.empty()) break;
          any = true;
          fill.values[c] = median_of(neighbours);
        }
        if (any) fills.push_back(std::move(fill));
      }
    }
    if (fills.empty()) fail(ErrorCode::MaskTooLarge, "no unflagged pixels to inpaint from");
    for (const Fill& f : fills) {
      for (std::size_t c = 0; c < ch; ++c) out.data()[f.index * ch + c] = f.values[c];
      flagged[f.index] = false;
    }
    remaining -= fills.size();
  }
  return out;
}

std::vector<double> gaussian_kernel(std::size_t k, double sigma) {
  if (k == 0 || k % 2 == 0) fail(ErrorCode::EvenKernel, "kernel size must be odd");
  const std::vector<double> w = gaussian_weights_1d(k, sigma);
  std::vector<double> out(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = w[i] * w[j];
  return out;
}

ImageBuffer denoise(const ImageBuffer& img, const DenoiseMethod& method) {
  require_nonempty(img);
  return std::visit(
      [&](const auto& m) -> ImageBuffer {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, MedianDenoise>) {
          return median_filter(img, m.kernel);
        } else if constexpr (std::is_same_v<M, GaussianDenoise>) {
          return gaussian_filter(img, m.kernel, m.sigma);
        } else {
          return img;
        }
      },
      method);
}

ImageBuffer normalize(const ImageBuffer& img, Normalization method) {
  require_nonempty(img);
  ImageBuffer out = img;
  auto v = out.data();
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double mn = *mn_it, mx = *mx_it;

  switch (method) {
    case Normalization::MinMax: {
      if (mx == mn) {
        std::fill(v.begin(), v.end(), 0.0);
        break;
      }
      for (double& x : v) x = std::clamp((x - mn) / (mx - mn), 0.0, 1.0);
      break;
    }
    case Normalization::ZScore: {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = std::sqrt(var / static_cast<double>(v.size()));
      if (sd == 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        break;
      }
      for (double& x : v) x = (x - mean) / sd;
      const auto [zlo, zhi] = std::minmax_element(v.begin(), v.end());
      const double lo = *zlo, hi = *zhi;
      if (hi == lo) {
        std::fill(v.begin(), v.end(), 0.0);
        break;
      }
      for (double& x : v) x = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
      break;
    }
    case Normalization::DecimalScaling: {
      const double peak = std::max(std::fabs(mn), std::fabs(mx));
      double scale = 1.0;
      while (peak / scale > 1.0) scale *= 10.0;
      if (scale != 1.0) {
        for (double& x : v) x /= scale;
      }
      break;
    }
  }
  return out;
}

ImageBuffer resize(const ImageBuffer& img, std::size_t height, std::size_t width) {
  require_nonempty(img);
  if (height < 1 || width < 1) fail(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
  if (height == img.height() && width == img.width()) return img;

  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  const std::size_t ch = img.channels();
  const double ymax = static_cast<double>(img.height() - 1);
  const double xmax = static_cast<double>(img.width() - 1);
  ImageBuffer out(height, width, ch);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy_src = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, ymax);
    const auto y0 = static_cast<std::size_t>(std::floor(fy_src));
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = fy_src - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx_src = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, xmax);
      const auto x0 = static_cast<std::size_t>(std::floor(fx_src));
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double fx = fx_src - static_cast<double>(x0);
      for (std::size_t c = 0; c < ch; ++c) {
        const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
        const double bottom = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
        out.at(y, x, c) = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0);
      }
    }
  }
  return out;
}

PreprocessResult run_pipeline(const ImageBuffer& img, const PreprocessConfig& cfg) {
  require_nonempty(img);
  cfg.validate();
  PreprocessResult result;
  const ImageBuffer gray = to_grayscale(img);
  PreprocessConfig detect_cfg = cfg;
  detect_cfg.mean_window = std::min({cfg.mean_window, img.height(), img.width()});
  const ArtifactMask mask = detect_reflection(gray, detect_cfg);
  result.flagged_pixels = mask.count();

  ImageBuffer work = img;
  if (result.flagged_pixels > 0 && mask.fraction() <= 0.5) {
    work = inpaint(work, mask);
    result.inpainted = true;
  }
  work = denoise(work, cfg.denoise);
  work = resize(work, cfg.target_height, cfg.target_width);
  result.image = normalize(work, cfg.normalize);
  return result;
}

}  // namespace derm::preprocess
