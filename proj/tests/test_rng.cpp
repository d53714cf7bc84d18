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

#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dermnet/parallel.hpp"
#include "dermnet/rng.hpp"

using derm::CounterRng;
using derm::Stream;

TEST_CASE("counter streams are reproducible and keyed") {
  CounterRng a(7, Stream::Augment, 3), b(7, Stream::Augment, 3), c(7, Stream::Augment, 4), d(7, Stream::Split, 3);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
  }
}

TEST_CASE("uniform draws stay in range") {
  CounterRng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-2.0, 3.0);
    CHECK(v >= -2.0);
    CHECK(v <= 3.0);
  }
}

TEST_CASE("degenerate interval returns lo without consuming a draw") {
  CounterRng rng(9);
  CHECK(rng.uniform(0.25, 0.25) == 0.25);
  CHECK(rng.counter() == 0);
}

TEST_CASE("below covers its range evenly") {
  CounterRng rng(11);
  std::vector<int> hist(5, 0);
  for (int i = 0; i < 50000; ++i) ++hist[rng.below(5)];
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("normal draws have unit moments") {
  CounterRng rng(3);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.02);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v(50), w(50);
  std::iota(v.begin(), v.end(), 0);
  std::iota(w.begin(), w.end(), 0);
  CounterRng r1(5), r2(5);
  derm::shuffle(std::span<int>(v), r1);
  derm::shuffle(std::span<int>(w), r2);
  CHECK(v == w);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 50);
  std::vector<int> sorted(50);
  std::iota(sorted.begin(), sorted.end(), 0);
  CHECK(v != sorted);
}

TEST_CASE("parallel_for visits every index and rethrows the lowest failure") {
  derm::set_thread_count(4);
  std::vector<int> hit(1000, 0);
  derm::parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));

  try {
    derm::parallel_for(100, [](std::size_t i) {
      if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
  derm::set_thread_count(0);
}
