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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include <unistd.h>

#include "dermnet/error.hpp"
#include "dermnet/rng.hpp"
#include "dermnet/tensor.hpp"

namespace testing {

/// Runs fn and returns the ErrorCode it threw; fails the test otherwise.
template <typename Fn>
derm::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const derm::Error& e) {
    return e.code();
  }
  FAIL("expected derm::Error");
  return derm::ErrorCode::InvalidArgument;
}

#define CHECK_ERROR(expr, expected_code) CHECK(testing::code_of([&] { (void)(expr); }) == (expected_code))

inline derm::nn::Tensor random_tensor(derm::nn::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  derm::nn::Tensor t(std::move(shape));
  derm::CounterRng rng(seed);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-7}); }

/// Central difference of f with respect to t[i], h = 1e-6. Restores t[i].
inline double numeric_grad(derm::nn::Tensor& t, std::size_t i, const std::function<double()>& f, double h = 1e-6) {
  const double orig = t[i];
  t[i] = orig + h;
  const double up = f();
  t[i] = orig - h;
  const double down = f();
  t[i] = orig;
  return (up - down) / (2.0 * h);
}

/// Largest relative error between analytic and numeric gradients over all entries.
inline double max_grad_error(derm::nn::Tensor& t, const derm::nn::Tensor& analytic, const std::function<double()>& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, rel_err(analytic[i], numeric_grad(t, i, f)));
  return worst;
}

/// Weighted sum sum_i r_i y_i, used to turn an output tensor into a scalar.
inline double dot(const derm::nn::Tensor& a, const derm::nn::Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("dermnet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

}  // namespace testing
