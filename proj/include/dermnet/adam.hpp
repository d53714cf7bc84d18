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

#include "dermnet/model.hpp"

namespace derm::nn {

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  std::uint64_t t = 0;
  Parameters m;
  Parameters v;
  AdamHyper hyper;
};

/// Fresh state with zero moments shaped like params.
AdamState make_adam_state(const Parameters& params, AdamHyper hyper = {});

/// One bias-corrected Adam update in place.
void adam_step(Parameters& params, const Gradients& grads, AdamState& state);

/// Rounds every value to the nearest float. Training keeps parameters and
/// moments at 32-bit storage precision so checkpoints hold them exactly.
void round_to_float(Parameters& params);
void round_to_float(AdamState& state);

}  // namespace derm::nn
