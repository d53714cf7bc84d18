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

// Forward/backward kernels for the fixed layer set. Activations are NCHW
// for spatial layers and [N, features] for dense layers. Parallel loops
// only split independent output elements; every reduction runs in a fixed
// order, so results do not depend on the thread count.

#include <cstdint>
#include <vector>

#include "dermnet/tensor.hpp"

namespace derm::nn {

struct Conv2dCache {
  Tensor input;
  std::size_t stride = 1;
  std::size_t pad = 0;
};

struct Conv2dGrads {
  Tensor dx, dw, db;
};

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

/// Cross-correlation with zero padding. x: [N,C,H,W], w: [O,C,k,k], b: [O].
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad,
                      Conv2dCache* cache = nullptr);
Conv2dGrads conv2d_backward(const Conv2dCache& cache, const Tensor& w, const Tensor& dy);

struct MaxPoolCache {
  Shape input_shape;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

/// Window max; ties go to the first element in row-major window order.
Tensor maxpool_forward(const Tensor& x, std::size_t size, std::size_t stride, MaxPoolCache* cache = nullptr);
Tensor maxpool_backward(const MaxPoolCache& cache, const Tensor& dy);

struct DenseCache {
  Tensor input;
};

struct DenseGrads {
  Tensor dx, dw, db;
};

/// y = x W^T + b with x: [N, in], w: [units, in], b: [units].
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, DenseCache* cache = nullptr);
DenseGrads dense_backward(const DenseCache& cache, const Tensor& w, const Tensor& dy);

Tensor relu(const Tensor& x);
/// Gradient is zero where x <= 0.
Tensor relu_backward(const Tensor& x, const Tensor& dy);

double sigmoid(double z);
Tensor sigmoid(const Tensor& z);
/// dz = dy * s * (1 - s) with s = sigmoid(z).
Tensor sigmoid_backward(const Tensor& s, const Tensor& dy);

/// Inverted dropout. In training each element is kept with probability
/// 1 - rate and scaled by 1 / (1 - rate); the mask is a pure function of
/// (seed, element index). Inference is the identity. `mask` receives the
/// per-element multiplier when non-null.
Tensor dropout(const Tensor& x, double rate, std::uint64_t seed, bool training, std::vector<double>* mask = nullptr);
Tensor dropout_backward(const std::vector<double>& mask, const Tensor& dy);

constexpr double kProbClamp = 1e-7;

/// Mean binary cross-entropy on probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Tensor& p, const Tensor& y);
/// d loss / d p = (p - y) / (p (1 - p)) / N on clamped p.
Tensor bce_grad(const Tensor& p, const Tensor& y);
/// d loss / d z for p = sigmoid(z): (p - y) / N.
Tensor bce_logit_grad(const Tensor& p, const Tensor& y);

}  // namespace derm::nn
