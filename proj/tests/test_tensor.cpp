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

#include <limits>

#include "dermnet/tensor.hpp"
#include "helpers.hpp"

using namespace derm;
using namespace derm::nn;

TEST_CASE("shape helpers") {
  CHECK(element_count({2, 3, 4}) == 24);
  CHECK(element_count({}) == 1);
  CHECK(to_string(Shape{2, 3}) == "[2,3]");
}

TEST_CASE("construction and reshape keep row-major data") {
  Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  const Tensor r = t.reshaped({3, 2});
  CHECK(r.shape() == Shape{3, 2});
  CHECK(r[4] == 5.0);
  CHECK_ERROR(t.reshaped({4, 2}), ErrorCode::ShapeMismatch);
  CHECK_ERROR(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ErrorCode::ShapeMismatch);
}

TEST_CASE("finite checks") {
  Tensor t({3}, 1.0);
  CHECK(t.all_finite());
  CHECK_NOTHROW(require_finite(t, "t"));
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  CHECK_ERROR(require_finite(t, "t"), ErrorCode::NonFiniteValue);
  t[1] = std::numeric_limits<double>::infinity();
  CHECK_ERROR(require_finite(t, "t"), ErrorCode::NonFiniteValue);
}
