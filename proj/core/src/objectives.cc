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


#include "b2b/objectives.h"

#include <cmath>
#include <numbers>
#include <string>

#include "b2b/error.h"
#include "b2b/ops.h"
#include "b2b/tf_transform.h"

namespace b2b {
namespace {

void RequireSameShape(const char* what, const Eigen::MatrixXd& a,
                      const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    ThrowUsage("objectives.shape_mismatch",
               std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                   std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                   "x" + std::to_string(b.cols()));
  }
}

}  // namespace

double LogStftMagnitudeLoss(const Eigen::MatrixXd& reference,
                            const Eigen::MatrixXd& estimate) {
  RequireSameShape("l_mag", reference, estimate);
  if (reference.size() == 0) ThrowUsage("objectives.empty", "l_mag on empty matrices");
  const Eigen::ArrayXXd a = (reference.array() + kLogEps).log();
  const Eigen::ArrayXXd b = (estimate.array() + kLogEps).log();
  return (a - b).abs().mean();
}

double SpectralConvergence(const Eigen::MatrixXd& reference,
                           const Eigen::MatrixXd& estimate) {
  RequireSameShape("l_sc", reference, estimate);
  const double denom = reference.norm();
  if (!(denom > 0.0)) {
    ThrowUsage("objectives.zero_reference", "spectral convergence of an all-zero reference");
  }
  return (reference - estimate).norm() / denom;
}

Tensor LogStftMagnitudeLoss(const Tensor& reference, const Tensor& estimate) {
  return Mean(Abs(Sub(Log(AddScalar(reference, kLogEps)),
                      Log(AddScalar(estimate, kLogEps)))));
}

Tensor SpectralConvergence(const Tensor& reference, const Tensor& estimate) {
  double energy = 0.0;
  for (double v : reference.data()) energy += v * v;
  if (!(energy > 0.0)) {
    ThrowUsage("objectives.zero_reference", "spectral convergence of an all-zero reference");
  }
  return Div(Sqrt(Sum(Square(Sub(reference, estimate)))),
             Sqrt(Sum(Square(reference))));
}

Tensor DenormMagnitude(const Tensor& normalized, std::span<const double> peaks) {
  if (normalized.rank() < 1 || static_cast<std::size_t>(normalized.dim(0)) != peaks.size()) {
    ThrowUsage("objectives.shape_mismatch",
               "one peak per batch item expected for " + ShapeString(normalized.shape()));
  }
  // v -> dB = 50 (v - 1) -> magnitude = peak * 10^(dB / 20).
  const double half_range = 0.5 * (kCeilingDb - kFloorDb);
  const double k = std::numbers::ln10 / 20.0;
  const Tensor exponent = AddScalar(Scale(normalized, k * half_range),
                                    k * (kCeilingDb - half_range));
  std::vector<double> scale(normalized.numel());
  const std::size_t per_item = scale.size() / peaks.size();
  for (std::size_t i = 0; i < scale.size(); ++i) scale[i] = peaks[i / per_item];
  return Mul(Exp(exponent), Tensor::FromVector(normalized.shape(), std::move(scale)));
}

Tensor DiscriminatorLoss(const Tensor& real_logits, const Tensor& fake_logits) {
  return Add(BceWithLogits(real_logits, 1.0), BceWithLogits(fake_logits, 0.0));
}

Tensor GeneratorAdversarialLoss(const Tensor& fake_logits) {
  return BceWithLogits(fake_logits, 1.0);
}

Tensor TotalGeneratorLoss(const Tensor& adversarial, const Tensor& magnitude,
                          const Tensor& convergence, const LossWeights& w) {
  return Add(adversarial, Add(Scale(magnitude, w.magnitude),
                              Scale(convergence, w.convergence)));
}

double TotalGeneratorLoss(double adversarial, double magnitude,
                          double convergence, const LossWeights& w) {
  return adversarial + (w.magnitude * magnitude + w.convergence * convergence);
}

}  // namespace b2b
