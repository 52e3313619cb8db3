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


#ifndef B2B_TESTS_OP_SHAPES_H_
#define B2B_TESTS_OP_SHAPES_H_

#include <string>
#include <vector>

#include "b2b/rng.h"
#include "b2b/tensor.h"

namespace b2b::testing {

// Random input shapes for a gradient-check op, bounded by 8x8x16x16 and
// compatible with the stride (2, 1) / padding (1, 0) convolutions used by
// the op registry.
inline std::vector<Shape> RandomOpShapes(const std::string& op, SplitMix64& rng) {
  auto pick = [&rng](int lo, int hi) {
    return lo + static_cast<int>(rng.Below(static_cast<uint64_t>(hi - lo + 1)));
  };
  const int n = pick(1, 3), c = pick(1, 4), h = pick(2, 12), w = pick(2, 12);
  const Shape x = {n, c, h, w};
  if (op == "conv2d" || op == "conv_transpose2d") {
    const int o = pick(1, 4), kh = pick(1, std::min(4, h + 2)), kw = pick(1, std::min(3, w));
    if (op == "conv2d") return {x, {o, c, kh, kw}, {o}};
    return {x, {c, o, kh + 1, kw}, {o}};
  }
  if (op == "batch_norm2d_train" || op == "batch_norm2d_eval") {
    return {{n + 1, c, h, w}, {c}, {c}};
  }
  if (op == "concat_channels") return {x, {n, pick(1, 4), h, w}};
  if (op == "add" || op == "sub" || op == "mul" || op == "div" ||
      op == "bce_with_logits" || op == "l1_mean") {
    return {x, x};
  }
  return {x};
}

}  // namespace b2b::testing

#endif  // B2B_TESTS_OP_SHAPES_H_
