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

#ifndef B2B_OPS_H_
#define B2B_OPS_H_

#include <cstdint>
#include <vector>

#include "b2b/tensor.h"

namespace b2b {

// (height, width) pair. Height is the frequency axis of a spectrogram.
struct Hw {
  int h = 1;
  int w = 1;
  bool operator==(const Hw&) const = default;
};

// NCHW convolution. weight: [out, in, kh, kw]; bias: [out] or undefined.
// Output size per axis: floor((in + 2 pad - kernel) / stride) + 1.
Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Hw stride, Hw padding);

// Adjoint of Conv2d. weight: [in, out, kh, kw]; bias: [out] or undefined.
// Output size per axis: (in - 1) stride - 2 pad + kernel.
Tensor ConvTranspose2d(const Tensor& x, const Tensor& weight,
                       const Tensor& bias, Hw stride, Hw padding);

// Per-channel running statistics for batch normalization.
struct BatchNormStats {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormStats(int channels = 0)
      : running_mean(static_cast<std::size_t>(channels), 0.0),
        running_var(static_cast<std::size_t>(channels), 1.0) {}
};

// In training mode normalizes with biased batch statistics and updates the
// running estimates (unbiased variance); otherwise it is the affine map
// defined by the running estimates.
Tensor BatchNorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats& stats, bool training);

Tensor LeakyRelu(const Tensor& x, double slope);
Tensor Relu(const Tensor& x);
Tensor Tanh(const Tensor& x);
Tensor Sigmoid(const Tensor& x);

// Inverted dropout. When active, each element is zeroed with probability p
// (mask drawn from the counter stream `seed`) and survivors are scaled by
// 1 / (1 - p). Identity when inactive.
Tensor Dropout(const Tensor& x, double p, uint64_t seed, bool active);

// [N, C1, H, W] ++ [N, C2, H, W] -> [N, C1 + C2, H, W].
Tensor ConcatChannels(const Tensor& a, const Tensor& b);

// Mean numerically stable binary cross-entropy on logits.
Tensor BceWithLogits(const Tensor& logits, const Tensor& targets);
Tensor BceWithLogits(const Tensor& logits, double target);

// mean |x - y|; the subgradient at zero is zero.
Tensor L1Mean(const Tensor& x, const Tensor& y);

// Elementwise helpers used by the spectral losses.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Div(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& x, double factor);
Tensor AddScalar(const Tensor& x, double offset);
Tensor Exp(const Tensor& x);
Tensor Log(const Tensor& x);
Tensor Abs(const Tensor& x);
Tensor Sqrt(const Tensor& x);
Tensor Square(const Tensor& x);
Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);

// Conv output length along one axis; throws if non-positive.
int ConvOutputSize(int in, int kernel, int stride, int pad);
int ConvTransposeOutputSize(int in, int kernel, int stride, int pad);

}  // namespace b2b

#endif  // B2B_OPS_H_
