// Copyright 2026 The b2b-plc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef B2B_ADAM_H_
#define B2B_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "b2b/tensor.h"

namespace b2b {

// Moments for one parameter list. beta1 = 0.5 follows the usual
// adversarial-training setting.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int64_t step_count = 0;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update. Gradients are read but not cleared.
// Throws autodiff.missing_grad if any parameter has no gradient.
void AdamStep(std::span<Tensor> params, AdamState& state);

void ZeroGrad(std::span<Tensor> params);

}  // namespace b2b

#endif  // B2B_ADAM_H_
