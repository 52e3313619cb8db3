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


#ifndef B2B_OBJECTIVES_H_
#define B2B_OBJECTIVES_H_

#include <span>

#include <Eigen/Dense>

#include "b2b/tensor.h"

namespace b2b {

// Weights of the two spectral terms in the generator objective.
struct LossWeights {
  double magnitude = 250.0;
  double convergence = 250.0;
};

// Mean over bins of |ln(ref + eps) - ln(est + eps)|.
double LogStftMagnitudeLoss(const Eigen::MatrixXd& reference,
                            const Eigen::MatrixXd& estimate);

// ||ref - est||_F / ||ref||_F. Throws on an all-zero reference.
double SpectralConvergence(const Eigen::MatrixXd& reference,
                           const Eigen::MatrixXd& estimate);

// Tensor forms, differentiable in both arguments. The spectral convergence
// ratio is taken over the whole tensor (all batch items together).
Tensor LogStftMagnitudeLoss(const Tensor& reference, const Tensor& estimate);
Tensor SpectralConvergence(const Tensor& reference, const Tensor& estimate);

// Maps normalized network values [N, 1, H, W] back to linear magnitudes,
// peaks[n] being the reference peak of batch item n.
Tensor DenormMagnitude(const Tensor& normalized, std::span<const double> peaks);

// BCE(real, 1) + BCE(fake, 0), each averaged over patches and batch.
Tensor DiscriminatorLoss(const Tensor& real_logits, const Tensor& fake_logits);
// Non-saturating BCE(fake, 1).
Tensor GeneratorAdversarialLoss(const Tensor& fake_logits);

// adv + w.magnitude * l_mag + w.convergence * l_sc.
Tensor TotalGeneratorLoss(const Tensor& adversarial, const Tensor& magnitude,
                          const Tensor& convergence, const LossWeights& w = {});
double TotalGeneratorLoss(double adversarial, double magnitude,
                          double convergence, const LossWeights& w = {});

}  // namespace b2b

#endif  // B2B_OBJECTIVES_H_
