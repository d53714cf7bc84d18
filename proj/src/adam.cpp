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
#include "dermnet/adam.hpp"

#include <cmath>

#include "dermnet/error.hpp"

namespace derm::nn {

AdamState make_adam_state(const Parameters& params, AdamHyper hyper) {
  return AdamState{0, zeros_like(params), zeros_like(params), hyper};
}

void adam_step(Parameters& params, const Gradients& grads, AdamState& state) {
  if (!same_shapes(params, grads)) fail(ErrorCode::ShapeMismatch, "gradients do not mirror parameters");
  if (!same_shapes(params, state.m) || !same_shapes(params, state.v)) {
    fail(ErrorCode::ShapeMismatch, "optimizer moments do not mirror parameters");
  }
  const AdamHyper& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correct1 = 1.0 - std::pow(h.beta1, t);
  const double correct2 = 1.0 - std::pow(h.beta2, t);

  auto update = [&](Tensor& theta, const Tensor& g, Tensor& m, Tensor& v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      theta[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, grads[l].weight, state.m[l].weight, state.v[l].weight);
    update(params[l].bias, grads[l].bias, state.m[l].bias, state.v[l].bias);
  }
}

void round_to_float(Parameters& params) {
  for (auto& p : params) {
    for (double& v : p.weight.data()) v = static_cast<double>(static_cast<float>(v));
    for (double& v : p.bias.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

void round_to_float(AdamState& state) {
  round_to_float(state.m);
  round_to_float(state.v);
}

}  // namespace derm::nn
