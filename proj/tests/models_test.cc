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

#include <gtest/gtest.h>

#include "b2b/checkpoint.h"
#include "b2b/models.h"
#include "b2b/ops.h"
#include "b2b/rng.h"
#include "test_util.h"

namespace b2b {
namespace {

using testing::ErrorCode;

Tensor RandomInput(int n, int size, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n) * size * size);
  for (double& x : v) x = rng.Uniform(-1.0, 1.0);
  return Tensor::FromVector({n, 1, size, size}, std::move(v));
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
  return m;
}

Tensor FindParam(const Generator& g, const std::string& name) {
  for (const auto& [n, t] : g.NamedParameters()) {
    if (n == name) return t;
  }
  return Tensor();
}

TEST(Generator, FullSizeShapeAndBound) {
  Generator g(GeneratorPlan{}, 1);
  NoGradGuard no_grad;
  const Tensor y = g.Forward(Tensor::Zeros({1, 1, 256, 256}), {.training = false});
  EXPECT_EQ(y.shape(), (Shape{1, 1, 256, 256}));
  for (double v : y.data()) {
    ASSERT_TRUE(std::isfinite(v));
    ASSERT_GT(v, -1.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(Generator, SeedsChangeOutput) {
  const GeneratorPlan plan = ModelConfig::Reduced().generator;
  Generator a(plan, 1), b(plan, 2);
  NoGradGuard no_grad;
  const Tensor x = RandomInput(1, 64, 3);
  const ForwardOptions opts{.training = false, .dropout = false};
  EXPECT_GT(MaxAbsDiff(a.Forward(x, opts), b.Forward(x, opts)), 0.0);
}

TEST(Generator, DropoutSeedControlsOutput) {
  Generator g(ModelConfig::Reduced().generator, 4);
  NoGradGuard no_grad;
  const Tensor x = RandomInput(2, 64, 5);
  const Tensor a = g.Forward(x, {.training = false, .dropout = true, .dropout_seed = 10});
  const Tensor b = g.Forward(x, {.training = false, .dropout = true, .dropout_seed = 10});
  const Tensor c = g.Forward(x, {.training = false, .dropout = true, .dropout_seed = 11});
  EXPECT_EQ(MaxAbsDiff(a, b), 0.0);
  EXPECT_GT(MaxAbsDiff(a, c), 0.0);
  // Eval mode with dropout off is a pure function of the input.
  const Tensor d = g.Forward(x, {.training = false, .dropout = false, .dropout_seed = 10});
  const Tensor e = g.Forward(x, {.training = false, .dropout = false, .dropout_seed = 11});
  EXPECT_EQ(MaxAbsDiff(d, e), 0.0);
}

TEST(Generator, RejectsBadInput) {
  Generator g(ModelConfig::Reduced().generator, 1);
  EXPECT_EQ(ErrorCode([&] { g.Forward(Tensor::Zeros({1, 1, 32, 32}), {}); }), "models.bad_input");
  EXPECT_EQ(ErrorCode([&] { g.Forward(Tensor::Zeros({1, 2, 64, 64}), {}); }), "models.bad_input");
  EXPECT_EQ(ErrorCode([&] { g.Forward(Tensor::Full({1, 1, 64, 64}, 1.5), {}); }),
            "models.input_range");
  GeneratorPlan bad = ModelConfig::Reduced().generator;
  bad.channels.pop_back();
  EXPECT_EQ(ErrorCode([&] { Generator(bad, 1); }), "models.bad_plan");
}

TEST(Generator, SkipLadderParameterNames) {
  Generator g(ModelConfig::Reduced().generator, 1);
  // Innermost and outermost encoder stages carry a bias; the rest batch norm.
  EXPECT_TRUE(FindParam(g, "g.down0.bias").defined());
  EXPECT_FALSE(FindParam(g, "g.down0.bn.gamma").defined());
  EXPECT_TRUE(FindParam(g, "g.down1.bn.gamma").defined());
  EXPECT_TRUE(FindParam(g, "g.down5.bias").defined());
  // Decoder stage 1 sees its own input plus the skip from encoder stage 4.
  const Tensor up1 = FindParam(g, "g.up1.weight");
  ASSERT_TRUE(up1.defined());
  EXPECT_EQ(up1.dim(0), 2 * 256);
  EXPECT_EQ(FindParam(g, "g.up5.weight").dim(1), 1);
}

TEST(Generator, FirstConvGradientMatchesFiniteDifferences) {
  Generator g(ModelConfig::Reduced().generator, 6);
  const Tensor x = RandomInput(1, 64, 7), target = RandomInput(1, 64, 8);
  const ForwardOptions opts{.training = true, .dropout = true, .dropout_seed = 9};
  Tensor w = FindParam(g, "g.down0.weight");
  for (auto p : g.Parameters()) p.ZeroGrad();
  L1Mean(g.Forward(x, opts), target).Backward();
  const std::vector<double> analytic(w.grad().begin(), w.grad().end());

  SplitMix64 rng(10);
  NoGradGuard no_grad;
  const double h = 1e-6;
  for (int probe = 0; probe < 3; ++probe) {
    const std::size_t i = rng.Below(w.numel());
    const double saved = w.at(i);
    w.at(i) = saved + h;
    const double plus = L1Mean(g.Forward(x, opts), target).item();
    w.at(i) = saved - h;
    const double minus = L1Mean(g.Forward(x, opts), target).item();
    w.at(i) = saved;
    const double numeric = (plus - minus) / (2 * h);
    EXPECT_LT(std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6}),
              1e-3)
        << "index " << i << " numeric " << numeric << " analytic " << analytic[i];
  }
}

TEST(Generator, StaysFiniteOverRandomPasses) {
  Generator g(ModelConfig::Reduced().generator, 11);
  for (int pass = 0; pass < 100; ++pass) {
    for (auto p : g.Parameters()) p.ZeroGrad();
    const Tensor y = g.Forward(RandomInput(1, 64, 100 + pass),
                               {.training = true, .dropout = true, .dropout_seed = static_cast<uint64_t>(pass)});
    L1Mean(y, RandomInput(1, 64, 500 + pass)).Backward();
    for (double v : y.data()) ASSERT_TRUE(std::isfinite(v) && std::abs(v) < 1.0);
    for (const auto& p : g.Parameters())
      for (double v : p.grad()) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Discriminator, FullSizePatchGrid) {
  const DiscriminatorPlan plan;
  EXPECT_EQ(plan.OutputSize(), (Hw{30, 30}));
  // Same arithmetic layer by layer.
  int h = 256, w = 256;
  for (int s : plan.strides) {
    h = ConvOutputSize(h, 8, s, 3);
    w = ConvOutputSize(w, 2, s, 0);
  }
  EXPECT_EQ(h, 30);
  EXPECT_EQ(w, 30);

  Discriminator d(plan, 1);
  NoGradGuard no_grad;
  const Tensor y = d.Forward(Tensor::Zeros({1, 1, 256, 256}), Tensor::Zeros({1, 1, 256, 256}),
                             {.training = false});
  EXPECT_EQ(y.shape(), (Shape{1, 1, 30, 30}));
}

TEST(Discriminator, ZeroFinalLayerGivesEvenOdds) {
  Discriminator d(ModelConfig::Reduced().discriminator, 2);
  d.ZeroFinalLayer();
  NoGradGuard no_grad;
  const Tensor y = d.Forward(RandomInput(2, 64, 1), RandomInput(2, 64, 2), {.training = true});
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
  const Tensor odds = Sigmoid(y);
  for (double v : odds.data()) EXPECT_EQ(v, 0.5);
}

TEST(Discriminator, RejectsMismatchedInputs) {
  Discriminator d(ModelConfig::Reduced().discriminator, 2);
  EXPECT_EQ(ErrorCode([&] { d.Forward(RandomInput(1, 64, 1), RandomInput(2, 64, 2), {}); }),
            "models.bad_input");
  EXPECT_EQ(ErrorCode([&] { d.Forward(RandomInput(1, 64, 1), RandomInput(1, 32, 2), {}); }),
            "models.bad_input");
}

TEST(Discriminator, LogitsDependOnlyOnReceptiveField) {
  const DiscriminatorPlan plan = ModelConfig::Reduced().discriminator;
  Discriminator d(plan, 3);
  const ForwardOptions eval{.training = false};
  const Tensor cond = RandomInput(1, 64, 4);
  Tensor cand = RandomInput(1, 64, 5);
  NoGradGuard no_grad;
  const Tensor base = d.Forward(cond, cand, eval);
  const int p = base.dim(2), q = base.dim(3);

  const std::vector<int> kh(plan.layers(), plan.kernel.h), kw(plan.layers(), plan.kernel.w);
  const std::vector<int> ph(plan.layers(), plan.padding.h), pw(plan.layers(), plan.padding.w);
  const std::vector<int>& strides = plan.strides;

  SplitMix64 rng(6);
  int outside = 0, inside_moved = 0;
  for (int probe = 0; probe < 8; ++probe) {
    const int r = static_cast<int>(rng.Below(64)), c = static_cast<int>(rng.Below(64));
    Tensor moved = cand.Clone();
    moved.at(static_cast<std::size_t>(r) * 64 + c) += 0.5;
    const Tensor y = d.Forward(cond, moved, eval);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < q; ++j) {
        const auto [r0, r1] = ReceptiveSpan(kh, strides, ph, i);
        const auto [c0, c1] = ReceptiveSpan(kw, strides, pw, j);
        const double delta = y.at(static_cast<std::size_t>(i) * q + j) -
                             base.at(static_cast<std::size_t>(i) * q + j);
        if (r < r0 || r > r1 || c < c0 || c > c1) {
          EXPECT_EQ(delta, 0.0) << "pixel (" << r << "," << c << ") unit (" << i << "," << j << ")";
          ++outside;
        } else if (delta != 0.0) {
          ++inside_moved;
        }
      }
  }
  EXPECT_GT(outside, 0);
  EXPECT_GT(inside_moved, 0);

  // Changing the whole candidate moves every logit.
  const Tensor other = d.Forward(cond, RandomInput(1, 64, 7), eval);
  EXPECT_GT(MaxAbsDiff(base, other), 0.0);
}

TEST(ReceptiveField, PublishedPlans) {
  std::vector<Hw> s = {{2, 2}, {2, 2}, {2, 2}, {1, 1}, {1, 1}};
  EXPECT_EQ(ReceptiveField(std::vector<Hw>(5, {8, 2}), s), (Hw{162, 24}));
  EXPECT_EQ(ReceptiveField(std::vector<Hw>(5, {4, 4}), s), (Hw{70, 70}));
  EXPECT_EQ(ReceptiveField(std::vector<Hw>{{3, 3}}, std::vector<Hw>{{1, 1}}), (Hw{3, 3}));
  EXPECT_EQ(ErrorCode([] { ReceptiveField({}, {}); }), "rf.bad_lists");
  EXPECT_EQ(ErrorCode([&] { ReceptiveField(std::vector<Hw>(2, {3, 3}), s); }), "rf.bad_lists");
}

TEST(ReceptiveField, SpanWidthMatchesField) {
  const std::vector<int> k(5, 8), st = {2, 2, 2, 1, 1}, pad(5, 3);
  const auto [lo, hi] = ReceptiveSpan(k, st, pad, 4);
  EXPECT_EQ(hi - lo + 1, 162);
  const auto [lo0, hi0] = ReceptiveSpan(k, st, pad, 0);
  EXPECT_EQ(lo - lo0, 4 * 8);  // output stride is the stride product
}

TEST(ModelCheckpoint, SelfDescribingRoundTrip) {
  const ModelConfig config = ModelConfig::Reduced();
  Generator g(config.generator, 12);
  Discriminator d(config.discriminator, 13);
  for (auto& [name, stats] : g.NamedStats()) {
    for (double& v : stats->running_mean) v = 0.25;
  }
  const Checkpoint back = DeserializeCheckpoint(SerializeCheckpoint(ModelToCheckpoint(config, g, &d)));
  LoadedModel loaded = ModelFromCheckpoint(back);
  EXPECT_EQ(loaded.config, config);
  ASSERT_TRUE(loaded.discriminator.has_value());

  const auto a = g.NamedParameters(), b = loaded.generator.NamedParameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    for (std::size_t k = 0; k < a[i].second.numel(); ++k) {
      ASSERT_EQ(b[i].second.at(k), static_cast<double>(static_cast<float>(a[i].second.at(k))));
    }
  }
  for (auto& [name, stats] : loaded.generator.NamedStats()) {
    for (double v : stats->running_mean) ASSERT_EQ(v, 0.25) << name;
  }

  const Checkpoint g_only = ModelToCheckpoint(config, g);
  EXPECT_FALSE(ModelFromCheckpoint(g_only).discriminator.has_value());
}

TEST(ModelCheckpoint, DescriptionRoundTripAndErrors) {
  for (const ModelConfig& c : {ModelConfig::Full(), ModelConfig::Reduced()}) {
    EXPECT_EQ(ParseModelDescription(DescribeModel(c)), c);
  }
  EXPECT_EQ(ErrorCode([] { ParseModelDescription("not a model"); }), "checkpoint.bad_header");

  const ModelConfig config = ModelConfig::Reduced();
  Checkpoint ckpt = ModelToCheckpoint(config, Generator(config.generator, 1));
  ckpt.records.pop_back();
  EXPECT_EQ(ErrorCode([&] { ModelFromCheckpoint(ckpt); }), "checkpoint.incompatible");
}

}  // namespace
}  // namespace b2b
