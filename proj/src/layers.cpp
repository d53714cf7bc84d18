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
#include "dermnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dermnet/error.hpp"
#include "dermnet/parallel.hpp"
#include "dermnet/rng.hpp"

namespace derm::nn {

namespace {

// Samples per partial weight-gradient buffer. Fixed so the summation order
// of the batch reduction does not depend on the number of threads.
constexpr std::size_t kGradChunk = 8;

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                                       to_string(t.shape()));
  }
}

struct ConvGeometry {
  std::size_t n, c, h, w, o, k, stride, pad, ho, wo;
  std::size_t patch() const { return c * k * k; }
  std::size_t pixels() const { return ho * wo; }
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad) {
  require_rank(x, 4, "conv input");
  require_rank(w, 4, "conv weight");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), stride, pad, 0, 0};
  if (w.dim(1) != g.c || w.dim(3) != g.k) {
    fail(ErrorCode::ShapeMismatch, "conv weight " + to_string(w.shape()) + " incompatible with input " + to_string(x.shape()));
  }
  g.ho = conv_output_size(g.h, g.k, stride, pad);
  g.wo = conv_output_size(g.w, g.k, stride, pad);
  return g;
}

// col[p][j] with p = (c, ki, kj) and j = (oy, ox).
void im2col(const ConvGeometry& g, const double* x, double* col) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        double* row = col + ((c * g.k + ki) * g.k + kj) * pixels;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                                ix < static_cast<std::ptrdiff_t>(g.w);
            row[oy * g.wo + ox] =
                inside ? x[(c * g.h + static_cast<std::size_t>(iy)) * g.w + static_cast<std::size_t>(ix)] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* col, double* dx) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const double* row = col + ((c * g.k + ki) * g.k + kj) * pixels;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            dx[(c * g.h + static_cast<std::size_t>(iy)) * g.w + static_cast<std::size_t>(ix)] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

inline void axpy(std::size_t n, double a, const double* __restrict x, double* __restrict y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) fail(ErrorCode::ShapeMismatch, "stride must be positive");
  const std::size_t padded = in + 2 * pad;
  if (kernel == 0 || kernel > padded) {
    fail(ErrorCode::ShapeMismatch, "kernel " + std::to_string(kernel) + " does not fit padded extent " + std::to_string(padded));
  }
  if ((padded - kernel) % stride != 0) {
    fail(ErrorCode::NonIntegralOutputSize, "(" + std::to_string(padded) + " - " + std::to_string(kernel) +
                                               ") is not divisible by stride " + std::to_string(stride));
  }
  return (padded - kernel) / stride + 1;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad,
                      Conv2dCache* cache) {
  const ConvGeometry g = conv_geometry(x, w, stride, pad);
  if (b.rank() != 1 || b.dim(0) != g.o) fail(ErrorCode::ShapeMismatch, "conv bias must be [" + std::to_string(g.o) + "]");
  Tensor y({g.n, g.o, g.ho, g.wo});
  const std::size_t patch = g.patch(), pixels = g.pixels();

  parallel_for(g.n, [&](std::size_t n) {
    std::vector<double> col(patch * pixels);
    im2col(g, x.raw() + n * g.c * g.h * g.w, col.data());
    double* out = y.raw() + n * g.o * pixels;
    std::size_t o = 0;
    for (; o + 4 <= g.o; o += 4) {
      double* __restrict y0 = out + o * pixels;
      double* __restrict y1 = y0 + pixels;
      double* __restrict y2 = y1 + pixels;
      double* __restrict y3 = y2 + pixels;
      std::fill(y0, y0 + pixels, b[o]);
      std::fill(y1, y1 + pixels, b[o + 1]);
      std::fill(y2, y2 + pixels, b[o + 2]);
      std::fill(y3, y3 + pixels, b[o + 3]);
      const double* w0 = w.raw() + o * patch;
      for (std::size_t p = 0; p < patch; ++p) {
        const double a0 = w0[p], a1 = w0[patch + p], a2 = w0[2 * patch + p], a3 = w0[3 * patch + p];
        const double* __restrict c = col.data() + p * pixels;
        for (std::size_t j = 0; j < pixels; ++j) {
          const double v = c[j];
          y0[j] += a0 * v;
          y1[j] += a1 * v;
          y2[j] += a2 * v;
          y3[j] += a3 * v;
        }
      }
    }
    for (; o < g.o; ++o) {
      double* yo = out + o * pixels;
      std::fill(yo, yo + pixels, b[o]);
      for (std::size_t p = 0; p < patch; ++p) axpy(pixels, w[o * patch + p], col.data() + p * pixels, yo);
    }
  });

  if (cache) {
    cache->input = x;
    cache->stride = stride;
    cache->pad = pad;
  }
  return y;
}

Conv2dGrads conv2d_backward(const Conv2dCache& cache, const Tensor& w, const Tensor& dy) {
  const ConvGeometry g = conv_geometry(cache.input, w, cache.stride, cache.pad);
  if (dy.shape() != Shape{g.n, g.o, g.ho, g.wo}) {
    fail(ErrorCode::ShapeMismatch, "conv dY " + to_string(dy.shape()) + " does not match forward output");
  }
  const std::size_t patch = g.patch(), pixels = g.pixels();
  Conv2dGrads grads{Tensor(cache.input.shape()), Tensor(w.shape()), Tensor({g.o})};

  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t o = 0; o < g.o; ++o) {
      const double* d = dy.raw() + (n * g.o + o) * pixels;
      for (std::size_t j = 0; j < pixels; ++j) grads.db[o] += d[j];
    }
  }

  const std::size_t chunks = (g.n + kGradChunk - 1) / kGradChunk;
  std::vector<std::vector<double>> partial(chunks);
  parallel_for(chunks, [&](std::size_t chunk) {
    std::vector<double>& dw = partial[chunk];
    dw.assign(g.o * patch, 0.0);
    std::vector<double> col(patch * pixels), col_t(pixels * patch), dcol(patch * pixels);
    const std::size_t end = std::min(g.n, (chunk + 1) * kGradChunk);
    for (std::size_t n = chunk * kGradChunk; n < end; ++n) {
      im2col(g, cache.input.raw() + n * g.c * g.h * g.w, col.data());
      for (std::size_t p = 0; p < patch; ++p)
        for (std::size_t j = 0; j < pixels; ++j) col_t[j * patch + p] = col[p * pixels + j];

      const double* d = dy.raw() + n * g.o * pixels;
      std::fill(dcol.begin(), dcol.end(), 0.0);
      for (std::size_t o = 0; o < g.o; ++o) {
        const double* d_o = d + o * pixels;
        double* dw_o = dw.data() + o * patch;
        for (std::size_t j = 0; j < pixels; ++j) {
          if (d_o[j] != 0.0) axpy(patch, d_o[j], col_t.data() + j * patch, dw_o);
        }
        const double* w_o = w.raw() + o * patch;
        for (std::size_t p = 0; p < patch; ++p) {
          if (w_o[p] != 0.0) axpy(pixels, w_o[p], d_o, dcol.data() + p * pixels);
        }
      }
      col2im_add(g, dcol.data(), grads.dx.raw() + n * g.c * g.h * g.w);
    }
  });
  for (const auto& dw : partial) axpy(dw.size(), 1.0, dw.data(), grads.dw.raw());
  return grads;
}

Tensor maxpool_forward(const Tensor& x, std::size_t size, std::size_t stride, MaxPoolCache* cache) {
  require_rank(x, 4, "maxpool input");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (size == 0 || stride == 0) fail(ErrorCode::ShapeMismatch, "pool size and stride must be positive");
  if (size > h || size > w) {
    fail(ErrorCode::WindowLargerThanInput, "pool " + std::to_string(size) + " larger than " + std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t ho = (h - size) / stride + 1, wo = (w - size) / stride + 1;
  Tensor y({n, c, ho, wo});
  std::vector<std::size_t> argmax(y.size());
  parallel_for(n * c, [&](std::size_t plane) {
    const std::size_t in_base = plane * h * w;
    const std::size_t out_base = plane * ho * wo;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = in_base + (oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < size; ++ky) {
          for (std::size_t kx = 0; kx < size; ++kx) {
            const std::size_t idx = in_base + (oy * stride + ky) * w + ox * stride + kx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        y[out_base + oy * wo + ox] = x[best];
        argmax[out_base + oy * wo + ox] = best;
      }
    }
  });
  if (cache) {
    cache->input_shape = x.shape();
    cache->argmax = std::move(argmax);
  }
  return y;
}

Tensor maxpool_backward(const MaxPoolCache& cache, const Tensor& dy) {
  if (dy.size() != cache.argmax.size()) fail(ErrorCode::ShapeMismatch, "maxpool dY does not match forward output");
  Tensor dx(cache.input_shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[cache.argmax[i]] += dy[i];
  return dx;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, DenseCache* cache) {
  require_rank(x, 2, "dense input");
  require_rank(w, 2, "dense weight");
  const std::size_t n = x.dim(0), in = x.dim(1), units = w.dim(0);
  if (w.dim(1) != in) fail(ErrorCode::ShapeMismatch, "dense weight " + to_string(w.shape()) + " vs input " + to_string(x.shape()));
  if (b.rank() != 1 || b.dim(0) != units) fail(ErrorCode::ShapeMismatch, "dense bias must be [" + std::to_string(units) + "]");
  Tensor y({n, units});
  parallel_for(n, [&](std::size_t s) {
    const double* xs = x.raw() + s * in;
    for (std::size_t u = 0; u < units; ++u) {
      const double* wu = w.raw() + u * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += wu[i] * xs[i];
      y[s * units + u] = acc + b[u];
    }
  });
  if (cache) cache->input = x;
  return y;
}

DenseGrads dense_backward(const DenseCache& cache, const Tensor& w, const Tensor& dy) {
  const Tensor& x = cache.input;
  const std::size_t n = x.dim(0), in = x.dim(1), units = w.dim(0);
  if (dy.shape() != Shape{n, units}) fail(ErrorCode::ShapeMismatch, "dense dY " + to_string(dy.shape()) + " mismatched");
  DenseGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor({units})};
  parallel_for(n, [&](std::size_t s) {
    double* dxs = g.dx.raw() + s * in;
    for (std::size_t u = 0; u < units; ++u) {
      const double d = dy[s * units + u];
      if (d != 0.0) axpy(in, d, w.raw() + u * in, dxs);
    }
  });
  parallel_for(units, [&](std::size_t u) {
    double* dwu = g.dw.raw() + u * in;
    double db = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double d = dy[s * units + u];
      db += d;
      if (d != 0.0) axpy(in, d, x.raw() + s * in, dwu);
    }
    g.db[u] = db;
  });
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  if (x.shape() != dy.shape()) fail(ErrorCode::ShapeMismatch, "relu dY shape mismatch");
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

double sigmoid(double z) {
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  // Keep the output strictly inside (0, 1) even when exp saturates.
  return std::clamp(s, std::numeric_limits<double>::denorm_min(), 1.0 - 0x1.0p-53);
}

Tensor sigmoid(const Tensor& z) {
  Tensor s = z;
  for (double& v : s.data()) v = sigmoid(v);
  return s;
}

Tensor sigmoid_backward(const Tensor& s, const Tensor& dy) {
  if (s.shape() != dy.shape()) fail(ErrorCode::ShapeMismatch, "sigmoid dY shape mismatch");
  Tensor dz(s.shape());
  for (std::size_t i = 0; i < s.size(); ++i) dz[i] = dy[i] * s[i] * (1.0 - s[i]);
  return dz;
}

Tensor dropout(const Tensor& x, double rate, std::uint64_t seed, bool training, std::vector<double>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorCode::InvalidArgument, "dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) {
    if (mask) mask->assign(x.size(), 1.0);
    return x;
  }
  const std::uint64_t key = derive_key({seed, static_cast<std::uint64_t>(Stream::Dropout)});
  const double scale = 1.0 / (1.0 - rate);
  Tensor y(x.shape());
  std::vector<double> m(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = static_cast<double>(splitmix64(key ^ splitmix64(i)) >> 11) * 0x1.0p-53;
    m[i] = u >= rate ? scale : 0.0;
    y[i] = x[i] * m[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

Tensor dropout_backward(const std::vector<double>& mask, const Tensor& dy) {
  if (mask.size() != dy.size()) fail(ErrorCode::ShapeMismatch, "dropout mask does not match dY");
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
  return dx;
}

namespace {

void check_bce_inputs(const Tensor& p, const Tensor& y) {
  if (p.size() != y.size() || p.empty()) fail(ErrorCode::ShapeMismatch, "probabilities and labels must have equal nonzero length");
  for (double v : y.data()) {
    if (v != 0.0 && v != 1.0) fail(ErrorCode::LabelNotBinary, "label " + std::to_string(v) + " is not 0 or 1");
  }
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

double bce_loss(const Tensor& p, const Tensor& y) {
  check_bce_inputs(p, y);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clamp_prob(p[i]);
    sum += y[i] == 1.0 ? std::log(q) : std::log(1.0 - q);
  }
  return -sum / static_cast<double>(p.size());
}

Tensor bce_grad(const Tensor& p, const Tensor& y) {
  check_bce_inputs(p, y);
  Tensor g(p.shape());
  const double inv_n = 1.0 / static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clamp_prob(p[i]);
    g[i] = (q - y[i]) / (q * (1.0 - q)) * inv_n;
  }
  return g;
}

Tensor bce_logit_grad(const Tensor& p, const Tensor& y) {
  check_bce_inputs(p, y);
  Tensor g(p.shape());
  const double inv_n = 1.0 / static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = (p[i] - y[i]) * inv_n;
  return g;
}

}  // namespace derm::nn
