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

#ifndef B2B_GRAD_CHECK_H_
#define B2B_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "b2b/tensor.h"

namespace b2b {

struct GradCheckReport {
  std::string op;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  bool passed = false;
};

using TensorFn = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares reverse-mode gradients of L = sum_i r_i * fn(inputs)_i (r fixed
// standard-normal weights) against central differences with step h, for
// every input with requires_grad. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3). At most
// `max_probes` coordinates per input are perturbed (0 = all).
GradCheckReport GradCheck(const std::string& name, const TensorFn& fn,
                          const std::vector<Tensor>& inputs, double tolerance,
                          double h = 1e-4, uint64_t seed = 0,
                          std::size_t max_probes = 4096);

// Named-op front end. Builds random inputs of the given shapes (values kept
// away from the kinks of piecewise ops) and runs GradCheck. See
// GradCheckOpNames() for the accepted names and the shape list each takes.
GradCheckReport GradCheckOp(const std::string& op,
                            const std::vector<Shape>& shapes,
                            double tolerance, uint64_t seed = 0);

std::vector<std::string> GradCheckOpNames();

}  // namespace b2b

#endif  // B2B_GRAD_CHECK_H_
