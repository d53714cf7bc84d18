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

#include "dermnet/adam.hpp"
#include "helpers.hpp"

using namespace derm;
using namespace derm::nn;

namespace {

Parameters scalar(double v) { return {LayerParams{Tensor({1}, v), Tensor({1}, 0.0)}}; }

}  // namespace

TEST_CASE("defaults") {
  const AdamHyper h;
  CHECK(h.lr == 0.001);
  CHECK(h.beta1 == 0.9);
  CHECK(h.beta2 == 0.999);
  CHECK(h.eps == 1e-8);
}

TEST_CASE("zero gradients leave parameters unchanged for every step") {
  Parameters p = {LayerParams{testing::random_tensor({3, 4}, 1), testing::random_tensor({3}, 2)}};
  const Parameters before = p;
  AdamState st = make_adam_state(p);
  for (int i = 0; i < 10; ++i) adam_step(p, zeros_like(p), st);
  CHECK(p == before);
  CHECK(st.t == 10);
}

TEST_CASE("first step from zero") {
  Parameters p = scalar(0.0);
  AdamState st = make_adam_state(p);
  adam_step(p, scalar(1.0), st);
  CHECK(p[0].weight[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(p[0].weight[0] == doctest::Approx(-0.000999999990).epsilon(1e-10));
  CHECK(st.t == 1);
}

TEST_CASE("moments stay nonnegative and shapes are enforced") {
  Parameters p = {LayerParams{testing::random_tensor({5}, 3), Tensor()}};
  AdamState st = make_adam_state(p);
  for (std::uint64_t i = 0; i < 20; ++i) {
    adam_step(p, {LayerParams{testing::random_tensor({5}, 100 + i), Tensor()}}, st);
    for (double v : st.v[0].weight.data()) CHECK(v >= 0.0);
  }
  CHECK_ERROR(adam_step(p, {LayerParams{Tensor({4}), Tensor()}}, st), ErrorCode::ShapeMismatch);
}

TEST_CASE("round_to_float keeps values representable as float") {
  Parameters p = {LayerParams{Tensor({2}, std::vector<double>{0.1, 1.0 / 3.0}), Tensor()}};
  round_to_float(p);
  CHECK(p[0].weight[0] == static_cast<double>(0.1f));
  CHECK(p[0].weight[1] == static_cast<double>(1.0f / 3.0f));
}
