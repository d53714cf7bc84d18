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
#include "dermnet/model.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "dermnet/error.hpp"
#include "dermnet/rng.hpp"
#include "dermnet/text.hpp"

namespace derm::nn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using KeyValues = std::map<std::string, std::string>;

std::size_t get_size(const KeyValues& kv, const std::string& key, std::size_t line, std::optional<std::size_t> fallback = {}) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    fail(ErrorCode::SpecInvalid, "line " + std::to_string(line) + ": missing '" + key + "'");
  }
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
    fail(ErrorCode::SpecInvalid, "line " + std::to_string(line) + ": bad integer for '" + key + "'");
  }
  return v;
}

double get_double(const KeyValues& kv, const std::string& key, std::size_t line) {
  auto it = kv.find(key);
  if (it == kv.end()) fail(ErrorCode::SpecInvalid, "line " + std::to_string(line) + ": missing '" + key + "'");
  double v = 0;
  auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
    fail(ErrorCode::SpecInvalid, "line " + std::to_string(line) + ": bad number for '" + key + "'");
  }
  return v;
}

void rethrow_with_layer(const Error& e, std::size_t index, const LayerSpec& layer) {
  throw Error(e.code(), "layer " + std::to_string(index) + " (" + layer_name(layer) + "): " + e.message());
}

}  // namespace

std::string layer_name(const LayerSpec& layer) {
  return std::visit(overloaded{
                        [](const Conv2D&) { return std::string("conv2d"); },
                        [](const MaxPool2D&) { return std::string("maxpool"); },
                        [](const Dense&) { return std::string("dense"); },
                        [](const ReLU&) { return std::string("relu"); },
                        [](const Dropout&) { return std::string("dropout"); },
                        [](const Flatten&) { return std::string("flatten"); },
                        [](const SigmoidHead&) { return std::string("sigmoid"); },
                    },
                    layer);
}

ModelSpec default_spec(std::size_t height, std::size_t width, std::size_t channels) {
  ModelSpec spec;
  spec.input = {height, width, channels};
  for (std::size_t out : {32u, 64u, 128u}) {
    spec.layers.emplace_back(Conv2D{out, 3, 1, 1});
    spec.layers.emplace_back(ReLU{});
    spec.layers.emplace_back(MaxPool2D{2, 2});
  }
  spec.layers.emplace_back(Flatten{});
  spec.layers.emplace_back(Dense{128});
  spec.layers.emplace_back(ReLU{});
  spec.layers.emplace_back(Dropout{0.5});
  spec.layers.emplace_back(Dense{1});
  spec.layers.emplace_back(SigmoidHead{});
  return spec;
}

ModelSpec parse_model_spec(std::string_view text) {
  ModelSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::string kind;
    if (!(words >> kind)) continue;
    KeyValues kv;
    for (std::string token; words >> token;) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) fail(ErrorCode::SpecInvalid, "line " + std::to_string(line_no) + ": expected key=value, got '" + token + "'");
      kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    if (kind == "input") {
      spec.input = {get_size(kv, "h", line_no), get_size(kv, "w", line_no), get_size(kv, "c", line_no, 3)};
    } else if (kind == "conv2d") {
      spec.layers.emplace_back(Conv2D{get_size(kv, "out", line_no), get_size(kv, "k", line_no),
                                      get_size(kv, "stride", line_no, 1), get_size(kv, "pad", line_no, 0)});
    } else if (kind == "maxpool") {
      const std::size_t size = get_size(kv, "size", line_no);
      spec.layers.emplace_back(MaxPool2D{size, get_size(kv, "stride", line_no, size)});
    } else if (kind == "dense") {
      spec.layers.emplace_back(Dense{get_size(kv, "units", line_no)});
    } else if (kind == "relu") {
      spec.layers.emplace_back(ReLU{});
    } else if (kind == "dropout") {
      spec.layers.emplace_back(Dropout{get_double(kv, "rate", line_no)});
    } else if (kind == "flatten") {
      spec.layers.emplace_back(Flatten{});
    } else if (kind == "sigmoid") {
      spec.layers.emplace_back(SigmoidHead{});
    } else {
      fail(ErrorCode::SpecInvalid, "line " + std::to_string(line_no) + ": unknown layer '" + kind + "'");
    }
  }
  validate(spec);
  return spec;
}

std::string format_model_spec(const ModelSpec& spec) {
  std::ostringstream out;
  out << "input h=" << spec.input.height << " w=" << spec.input.width << " c=" << spec.input.channels << "\n";
  for (const auto& layer : spec.layers) {
    std::visit(overloaded{
                   [&](const Conv2D& l) { out << "conv2d out=" << l.out_channels << " k=" << l.kernel << " stride=" << l.stride << " pad=" << l.pad; },
                   [&](const MaxPool2D& l) { out << "maxpool size=" << l.size << " stride=" << l.stride; },
                   [&](const Dense& l) { out << "dense units=" << l.units; },
                   [&](const ReLU&) { out << "relu"; },
                   [&](const Dropout& l) { out << "dropout rate=" << format_double(l.rate); },
                   [&](const Flatten&) { out << "flatten"; },
                   [&](const SigmoidHead&) { out << "sigmoid"; },
               },
               layer);
    out << "\n";
  }
  return out.str();
}

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
  if (spec.input.height == 0 || spec.input.width == 0 || spec.input.channels == 0) {
    fail(ErrorCode::SpecInvalid, "input dimensions must be positive");
  }
  if (spec.layers.size() < 2 || !std::holds_alternative<SigmoidHead>(spec.layers.back())) {
    fail(ErrorCode::SpecInvalid, "the last layer must be sigmoid");
  }
  const auto* head = std::get_if<Dense>(&spec.layers[spec.layers.size() - 2]);
  if (!head || head->units != 1) fail(ErrorCode::SpecInvalid, "sigmoid must follow dense units=1");

  std::vector<Shape> shapes;
  Shape cur{spec.input.channels, spec.input.height, spec.input.width};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::SpecInvalid, "layer " + std::to_string(i) + " (" + layer_name(layer) + "): " + why);
    };
    std::visit(overloaded{
                   [&](const Conv2D& l) {
                     if (cur.size() != 3) bad("needs a spatial input");
                     if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) bad("sizes must be positive");
                     try {
                       cur = {l.out_channels, conv_output_size(cur[1], l.kernel, l.stride, l.pad),
                              conv_output_size(cur[2], l.kernel, l.stride, l.pad)};
                     } catch (const Error& e) {
                       bad(e.message());
                     }
                   },
                   [&](const MaxPool2D& l) {
                     if (cur.size() != 3) bad("needs a spatial input");
                     if (l.size == 0 || l.stride == 0) bad("sizes must be positive");
                     if (l.size > cur[1] || l.size > cur[2]) bad("window larger than input " + to_string(cur));
                     cur = {cur[0], (cur[1] - l.size) / l.stride + 1, (cur[2] - l.size) / l.stride + 1};
                   },
                   [&](const Dense& l) {
                     if (cur.size() != 1) bad("needs a flattened input");
                     if (l.units == 0) bad("units must be positive");
                     cur = {l.units};
                   },
                   [&](const ReLU&) {},
                   [&](const Dropout& l) {
                     if (!(l.rate >= 0.0 && l.rate < 1.0)) bad("rate must be in [0, 1)");
                   },
                   [&](const Flatten&) { cur = {element_count(cur)}; },
                   [&](const SigmoidHead&) {
                     if (i + 1 != spec.layers.size()) bad("sigmoid must be the last layer");
                     cur = {1};
                   },
               },
               layer);
    shapes.push_back(cur);
  }
  return shapes;
}

void validate(const ModelSpec& spec) { (void)infer_shapes(spec); }

Parameters zeros_like(const Parameters& params) {
  Parameters out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back({Tensor(p.weight.shape()), Tensor(p.bias.shape())});
  return out;
}

bool same_shapes(const Parameters& a, const Parameters& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].weight.shape() != b[i].weight.shape() || a[i].bias.shape() != b[i].bias.shape()) return false;
  }
  return true;
}

std::size_t parameter_count(const Parameters& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.weight.size() + p.bias.size();
  return n;
}

Parameters init_params(const ModelSpec& spec, std::uint64_t seed) {
  const std::vector<Shape> shapes = infer_shapes(spec);
  Parameters params(spec.layers.size());
  Shape in{spec.input.channels, spec.input.height, spec.input.width};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    CounterRng rng(seed, Stream::Init, i);
    auto he_normal = [&](Shape shape, std::size_t fan_in) {
      Tensor t(std::move(shape));
      const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (double& v : t.data()) v = static_cast<float>(sd * rng.normal());
      return t;
    };
    if (const auto* c = std::get_if<Conv2D>(&spec.layers[i])) {
      params[i].weight = he_normal({c->out_channels, in[0], c->kernel, c->kernel}, in[0] * c->kernel * c->kernel);
      params[i].bias = Tensor({c->out_channels});
    } else if (const auto* d = std::get_if<Dense>(&spec.layers[i])) {
      params[i].weight = he_normal({d->units, in[0]}, in[0]);
      params[i].bias = Tensor({d->units});
    }
    in = shapes[i];
  }
  return params;
}

ForwardResult forward(const ModelSpec& spec, const Parameters& params, const Tensor& batch, Mode mode,
                      std::uint64_t dropout_seed) {
  const Shape expected{spec.input.channels, spec.input.height, spec.input.width};
  if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected || batch.dim(0) == 0) {
    fail(ErrorCode::ShapeMismatch, "batch " + to_string(batch.shape()) + " does not match model input [N]" + to_string(expected));
  }
  if (params.size() != spec.layers.size()) fail(ErrorCode::ShapeMismatch, "parameter list does not match the model");

  const bool training = mode == Mode::Train;
  const std::size_t n = batch.dim(0);
  ForwardResult result;
  result.cache.layers.resize(spec.layers.size());
  Tensor act = batch;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    LayerCache& lc = result.cache.layers[i];
    const LayerParams& p = params[i];
    try {
      std::visit(overloaded{
                     [&](const Conv2D& l) { act = conv2d_forward(act, p.weight, p.bias, l.stride, l.pad, &lc.conv); },
                     [&](const MaxPool2D& l) { act = maxpool_forward(act, l.size, l.stride, &lc.pool); },
                     [&](const Dense&) { act = dense_forward(act, p.weight, p.bias, &lc.dense); },
                     [&](const ReLU&) {
                       lc.relu_input = act;
                       act = relu(act);
                     },
                     [&](const Dropout& l) {
                       act = dropout(act, l.rate, derive_key({dropout_seed, i}), training, &lc.dropout_mask);
                     },
                     [&](const Flatten&) {
                       lc.flatten_input = act.shape();
                       act = act.reshaped({n, act.size() / n});
                     },
                     [&](const SigmoidHead&) { act = sigmoid(act.reshaped({n})); },
                 },
                 spec.layers[i]);
      require_finite(act, "activation");
    } catch (const Error& e) {
      rethrow_with_layer(e, i, spec.layers[i]);
    }
  }
  result.probs = act;
  result.cache.probs = act;
  return result;
}

Tensor predict(const ModelSpec& spec, const Parameters& params, const Tensor& batch) {
  return forward(spec, params, batch, Mode::Infer).probs;
}

Gradients backward(const ModelSpec& spec, const Parameters& params, const ForwardCache& cache, const Tensor& labels) {
  if (cache.layers.size() != spec.layers.size()) fail(ErrorCode::ShapeMismatch, "cache does not match the model");
  Gradients grads = zeros_like(params);
  const std::size_t n = cache.probs.size();
  Tensor d = bce_logit_grad(cache.probs, labels).reshaped({n, 1});
  for (std::size_t idx = spec.layers.size(); idx-- > 0;) {
    const LayerCache& lc = cache.layers[idx];
    const LayerParams& p = params[idx];
    try {
      std::visit(overloaded{
                     [&](const Conv2D&) {
                       Conv2dGrads g = conv2d_backward(lc.conv, p.weight, d);
                       grads[idx].weight = std::move(g.dw);
                       grads[idx].bias = std::move(g.db);
                       d = std::move(g.dx);
                     },
                     [&](const MaxPool2D&) { d = maxpool_backward(lc.pool, d); },
                     [&](const Dense&) {
                       DenseGrads g = dense_backward(lc.dense, p.weight, d);
                       grads[idx].weight = std::move(g.dw);
                       grads[idx].bias = std::move(g.db);
                       d = std::move(g.dx);
                     },
                     [&](const ReLU&) { d = relu_backward(lc.relu_input, d); },
                     [&](const Dropout&) { d = dropout_backward(lc.dropout_mask, d); },
                     [&](const Flatten&) { d = d.reshaped(lc.flatten_input); },
                     // d already holds dLoss/dlogit from the fused sigmoid + BCE gradient.
                     [&](const SigmoidHead&) {},
                 },
                 spec.layers[idx]);
    } catch (const Error& e) {
      rethrow_with_layer(e, idx, spec.layers[idx]);
    }
  }
  return grads;
}

}  // namespace derm::nn
