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


#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "b2b/grad_check.h"
#include "b2b/objectives.h"
#include "b2b/ops.h"
#include "b2b/rng.h"
#include "b2b/tf_transform.h"
#include "test_util.h"

namespace b2b {
namespace {

using testing::ErrorCode;

Eigen::MatrixXd RandomMagnitudes(int rows, int cols, uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(0.01, 3.0);
  return m;
}

Tensor ToTensor(const Eigen::MatrixXd& m, bool grad = false) {
  std::vector<double> v(m.size());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(r) * m.cols() + c] = m(r, c);
  return Tensor::FromVector({1, 1, static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                            std::move(v), grad);
}

TEST(LogMagnitudeLoss, ClosedForms) {
  const Eigen::MatrixXd s = RandomMagnitudes(7, 5, 1);
  EXPECT_EQ(LogStftMagnitudeLoss(s, s), 0.0);
  EXPECT_NEAR(LogStftMagnitudeLoss(s, std::numbers::e * s), 1.0, 1e-9);

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2), est = ones;
  est(0, 0) = std::exp(2.0);
  EXPECT_NEAR(LogStftMagnitudeLoss(ones, est), 0.5, 1e-9);
  EXPECT_NEAR(LogStftMagnitudeLoss(est, ones), 0.5, 1e-9);
}

TEST(LogMagnitudeLoss, Errors) {
  EXPECT_EQ(ErrorCode([] {
              LogStftMagnitudeLoss(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 3));
            }),
            "objectives.shape_mismatch");
}

TEST(SpectralConvergence, ClosedForms) {
  const Eigen::MatrixXd s = RandomMagnitudes(6, 9, 2);
  EXPECT_EQ(SpectralConvergence(s, s), 0.0);
  EXPECT_NEAR(SpectralConvergence(s, Eigen::MatrixXd::Zero(6, 9)), 1.0, 1e-12);
  EXPECT_NEAR(SpectralConvergence(s, 2.0 * s), 1.0, 1e-12);
}

TEST(SpectralConvergence, ScaleIdentityForRandomFactors) {
  const Eigen::MatrixXd s = RandomMagnitudes(16, 12, 3);
  SplitMix64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const double alpha = rng.Uniform(0.0, 3.0);
    EXPECT_NEAR(SpectralConvergence(s, alpha * s), std::abs(1.0 - alpha), 1e-9) << alpha;
  }
}

TEST(SpectralConvergence, Errors) {
  EXPECT_EQ(ErrorCode([] {
              SpectralConvergence(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Ones(3, 3));
            }),
            "objectives.zero_reference");
  EXPECT_EQ(ErrorCode([] {
              SpectralConvergence(Eigen::MatrixXd::Ones(3, 3), Eigen::MatrixXd::Ones(3, 2));
            }),
            "objectives.shape_mismatch");
}

TEST(SpectralLosses, NonNegativeAndZeroOnlyOnEquality) {
  for (uint64_t seed = 10; seed < 30; ++seed) {
    const Eigen::MatrixXd a = RandomMagnitudes(5, 5, seed), b = RandomMagnitudes(5, 5, seed + 100);
    EXPECT_GT(LogStftMagnitudeLoss(a, b), 0.0);
    EXPECT_GT(SpectralConvergence(a, b), 0.0);
  }
}

TEST(SpectralLosses, TensorFormsAgreeWithMatrixForms) {
  const Eigen::MatrixXd a = RandomMagnitudes(8, 6, 5), b = RandomMagnitudes(8, 6, 6);
  EXPECT_NEAR(LogStftMagnitudeLoss(ToTensor(a), ToTensor(b)).item(), LogStftMagnitudeLoss(a, b),
              1e-12);
  EXPECT_NEAR(SpectralConvergence(ToTensor(a), ToTensor(b)).item(), SpectralConvergence(a, b),
              1e-12);
}

TEST(SpectralLosses, PassFiniteDifferenceChecks) {
  const Eigen::MatrixXd a = RandomMagnitudes(6, 5, 7), b = RandomMagnitudes(6, 5, 8);
  const auto lmag = GradCheck(
      "l_mag", [](const std::vector<Tensor>& in) { return LogStftMagnitudeLoss(in[0], in[1]); },
      {ToTensor(a, true), ToTensor(b, true)}, 1e-4);
  EXPECT_TRUE(lmag.passed) << lmag.max_rel_error;
  const auto lsc = GradCheck(
      "l_sc", [](const std::vector<Tensor>& in) { return SpectralConvergence(in[0], in[1]); },
      {ToTensor(a, true), ToTensor(b, true)}, 1e-4);
  EXPECT_TRUE(lsc.passed) << lsc.max_rel_error;
}

TEST(DenormMagnitude, MatchesTransformModule) {
  SplitMix64 rng(9);
  Eigen::MatrixXd normalized(4, 3);
  for (int i = 0; i < normalized.size(); ++i) normalized.data()[i] = rng.Uniform(-1.0, 1.0);
  const double peak = 3.5;
  LogMagSpectrogram lm;
  lm.values = normalized;
  lm.peak = peak;
  const Eigen::MatrixXd expect = Denorm(lm);  // adds a zero Nyquist row
  const double peaks[] = {peak};
  const Tensor got = DenormMagnitude(ToTensor(normalized), peaks);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(got.at(static_cast<std::size_t>(r) * 3 + c), expect(r, c), 1e-12);

  const auto check = GradCheck(
      "denorm",
      [](const std::vector<Tensor>& in) {
        const double p[] = {2.0};
        return DenormMagnitude(in[0], p);
      },
      {ToTensor(normalized, true)}, 1e-4);
  EXPECT_TRUE(check.passed) << check.max_rel_error;
}

TEST(AdversarialLosses, ZeroLogits) {
  const Tensor zero = Tensor::Zeros({2, 1, 3, 3});
  EXPECT_NEAR(DiscriminatorLoss(zero, zero).item(), 2.0 * std::numbers::ln2, 1e-15);
  EXPECT_NEAR(GeneratorAdversarialLoss(zero).item(), std::numbers::ln2, 1e-15);
}

TEST(AdversarialLosses, SaturatedDiscriminator) {
  EXPECT_LT(DiscriminatorLoss(Tensor::Full({1, 1, 4, 4}, 20.0), Tensor::Full({1, 1, 4, 4}, -20.0))
                .item(),
            1e-8);
}

TEST(AdversarialLosses, GeneratorGradientPushesLogitsUp) {
  SplitMix64 rng(11);
  std::vector<double> v(2 * 1 * 5 * 5);
  for (double& x : v) x = rng.Uniform(-10.0, 10.0);
  Tensor fake = Tensor::FromVector({2, 1, 5, 5}, v, true);
  GeneratorAdversarialLoss(fake).Backward();
  for (double g : fake.grad()) EXPECT_LT(g, 0.0);
}

TEST(TotalGeneratorLoss, Assembles) {
  EXPECT_DOUBLE_EQ(TotalGeneratorLoss(std::numbers::ln2, 0.0, 0.0), std::numbers::ln2);
  EXPECT_EQ(TotalGeneratorLoss(0.0, 1.0, 1.0), 500.0);
  EXPECT_EQ(TotalGeneratorLoss(0.7, 1.0, 1.0, {0.0, 0.0}), 0.7);
  EXPECT_EQ(TotalGeneratorLoss(0.5, 0.2, 0.4, {10.0, 100.0}), 0.5 + 2.0 + 40.0);
  const Tensor t = TotalGeneratorLoss(Tensor::Scalar(0.0), Tensor::Scalar(1.0), Tensor::Scalar(1.0));
  EXPECT_EQ(t.item(), 500.0);
}

}  // namespace
}  // namespace b2b
