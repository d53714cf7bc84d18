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
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dermnet/layers.hpp"
#include "dermnet/tensor.hpp"

namespace derm::nn {

struct Conv2D {
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 0;
  bool operator==(const Conv2D&) const = default;
};
struct MaxPool2D {
  std::size_t size = 2;
  std::size_t stride = 2;
  bool operator==(const MaxPool2D&) const = default;
};
struct Dense {
  std::size_t units = 1;
  bool operator==(const Dense&) const = default;
};
struct ReLU {
  bool operator==(const ReLU&) const = default;
};
struct Dropout {
  double rate = 0.5;
  bool operator==(const Dropout&) const = default;
};
struct Flatten {
  bool operator==(const Flatten&) const = default;
};
struct SigmoidHead {
  bool operator==(const SigmoidHead&) const = default;
};

using LayerSpec = std::variant<Conv2D, MaxPool2D, Dense, ReLU, Dropout, Flatten, SigmoidHead>;

std::string layer_name(const LayerSpec& layer);

struct InputShape {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t channels = 3;
  bool operator==(const InputShape&) const = default;
};

struct ModelSpec {
  InputShape input;
  std::vector<LayerSpec> layers;
  bool operator==(const ModelSpec&) const = default;
};

/// conv(32)-pool-conv(64)-pool-conv(128)-pool, all 3x3 pad 1 with ReLU,
/// then flatten-dense(128)-relu-dropout(0.5)-dense(1)-sigmoid.
ModelSpec default_spec(std::size_t height = 64, std::size_t width = 64, std::size_t channels = 3);

/// One layer per line, e.g. "conv2d out=32 k=3 stride=1 pad=1". An optional
/// "input h=64 w=64 c=3" line sets the input shape. '#' starts a comment.
ModelSpec parse_model_spec(std::string_view text);
std::string format_model_spec(const ModelSpec& spec);

/// Per-sample activation shape after each layer (index i = output of layer i).
/// Throws SpecInvalid for an unusable architecture.
std::vector<Shape> infer_shapes(const ModelSpec& spec);
void validate(const ModelSpec& spec);

struct LayerParams {
  Tensor weight;
  Tensor bias;
  bool empty() const noexcept { return weight.empty() && bias.empty(); }
  bool operator==(const LayerParams&) const = default;
};

/// One entry per layer; layers without weights hold empty tensors.
using Parameters = std::vector<LayerParams>;
using Gradients = Parameters;

Parameters zeros_like(const Parameters& params);
bool same_shapes(const Parameters& a, const Parameters& b);
std::size_t parameter_count(const Parameters& params);

/// He-normal weights (std sqrt(2 / fan_in)) rounded to float, zero biases.
Parameters init_params(const ModelSpec& spec, std::uint64_t seed);

enum class Mode { Train, Infer };

struct LayerCache {
  Conv2dCache conv;
  MaxPoolCache pool;
  DenseCache dense;
  Tensor relu_input;
  std::vector<double> dropout_mask;
  Shape flatten_input;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Tensor probs;
};

struct ForwardResult {
  Tensor probs;  // [N]
  ForwardCache cache;
};

/// batch: [N, C, H, W] matching spec.input. Dropout masks in training mode
/// are keyed by (dropout_seed, layer index).
ForwardResult forward(const ModelSpec& spec, const Parameters& params, const Tensor& batch, Mode mode,
                      std::uint64_t dropout_seed = 0);

/// Inference-mode probabilities without keeping a cache.
Tensor predict(const ModelSpec& spec, const Parameters& params, const Tensor& batch);

/// Gradients of the mean BCE of the cached probabilities against labels.
Gradients backward(const ModelSpec& spec, const Parameters& params, const ForwardCache& cache, const Tensor& labels);

}  // namespace derm::nn
