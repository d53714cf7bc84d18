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
// Writes a synthetic blob dataset: make_fixture <dir> <n_pos> <n_neg> [size] [seed]
#include <cstdlib>
#include <iostream>
#include <string>

#include "dermnet/fixture.hpp"

int main(int argc, char** argv) {
  if (argc < 4) {
    std::cerr << "usage: make_fixture <dir> <n_positive> <n_negative> [size=32] [seed=0]\n";
    return 1;
  }
  const std::size_t size = argc > 4 ? std::stoul(argv[4]) : 32;
  const std::uint64_t seed = argc > 5 ? std::stoull(argv[5]) : 0;
  derm::fixture::write_dataset(argv[1], std::stoul(argv[2]), std::stoul(argv[3]), size, seed);
  return 0;
}
