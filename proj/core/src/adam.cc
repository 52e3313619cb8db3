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

#include "b2b/adam.h"

#include <cmath>

#include "b2b/error.h"

namespace b2b {

void AdamStep(std::span<Tensor> params, AdamState& state) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].has_grad()) {
      ThrowUsage("autodiff.missing_grad",
                 "parameter " + std::to_string(k) + " has no gradient");
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t k = 0; k < params.size(); ++k) {
      state.m[k].assign(params[k].numel(), 0.0);
      state.v[k].assign(params[k].numel(), 0.0);
    }
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k].data();
    const auto grad = params[k].grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != value.size()) {
      ThrowUsage("autodiff.adam_state", "moment shape differs from parameter");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void ZeroGrad(std::span<Tensor> params) {
  for (auto& p : params) p.ZeroGrad();
}

}  // namespace b2b
