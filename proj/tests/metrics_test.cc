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
#include <map>
#include <set>
#include <numbers>

#include <gtest/gtest.h>

#include "b2b/audio_io.h"
#include "b2b/loss_sim.h"
#include "b2b/metrics.h"
#include "b2b/rng.h"
#include "test_util.h"

namespace b2b {
namespace {

using testing::ErrorCode;

AudioBuffer Scaled(AudioBuffer b, double gain) {
  for (double& v : b.samples) v *= gain;
  return b;
}

// clean + white noise at the requested SNR (dB), noise from `seed`.
AudioBuffer WithNoise(const AudioBuffer& clean, double snr_db, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> noise(clean.size());
  double pn = 0.0, ps = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    noise[i] = rng.Normal();
    pn += noise[i] * noise[i];
    ps += clean.samples[i] * clean.samples[i];
  }
  const double k = std::sqrt(ps / pn / std::pow(10.0, snr_db / 10.0));
  AudioBuffer out = clean;
  for (std::size_t i = 0; i < noise.size(); ++i) out.samples[i] += k * noise[i];
  return out;
}

TEST(ResamplePoly, LengthAndPassband) {
  std::vector<double> x(1600);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 500.0 * i / 16000.0);
  const auto y = ResamplePoly(x, 5, 8);
  EXPECT_EQ(y.size(), 1000u);
  for (std::size_t i = 100; i < 900; ++i) {
    ASSERT_NEAR(y[i], std::sin(2.0 * std::numbers::pi * 500.0 * i / 10000.0), 2e-3) << i;
  }
  EXPECT_EQ(ResamplePoly(x, 3, 7).size(), (1600u * 3 + 6) / 7);
  EXPECT_EQ(ErrorCode([&] { ResamplePoly(x, 0, 1); }), "resample.bad_ratio");
}

TEST(Stoi, SelfScoreIsOne) {
  for (int i = 0; i < 50; ++i) {
    const AudioBuffer x = SynthClip(1.0, 90.0 + 3.0 * i, 1000 + i);
    EXPECT_NEAR(Stoi(x, x), 1.0, 1e-9) << i;
  }
}

TEST(Stoi, GainInvariant) {
  const AudioBuffer clean = SynthClip(2.0, 130.0, 1);
  const AudioBuffer degraded = WithNoise(clean, 5.0, 2);
  const double base = Stoi(clean, degraded);
  for (double gain : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(Stoi(clean, Scaled(clean, gain)), 1.0, 1e-9);
    EXPECT_NEAR(Stoi(clean, Scaled(degraded, gain)), base, 1e-9);
  }
}

TEST(Stoi, DecreasesAlongNoiseLadder) {
  const AudioBuffer clean = SynthClip(3.0, 120.0, 3);
  double previous = 1.0;
  for (double snr : {20.0, 10.0, 0.0, -10.0}) {
    const double s = Stoi(clean, WithNoise(clean, snr, 4));
    EXPECT_LT(s, previous) << snr;
    if (snr == 0.0) {
      EXPECT_GT(s, 0.5);
      EXPECT_LT(s, 1.0);
    }
    previous = s;
  }
}

TEST(Stoi, Errors) {
  const AudioBuffer x = SynthClip(1.0, 120.0, 5);
  AudioBuffer y = x;
  y.samples.pop_back();
  EXPECT_EQ(ErrorCode([&] { Stoi(x, y); }), "metrics.length_mismatch");
  const AudioBuffer tiny = SynthClip(0.2, 120.0, 5);
  EXPECT_EQ(ErrorCode([&] { Stoi(tiny, tiny); }), "stoi.too_short");
}

TEST(Lsd, ClosedFormsAndSymmetry) {
  const AudioBuffer x = SynthClip(1.0, 120.0, 6);
  EXPECT_EQ(Lsd(x, x), 0.0);
  EXPECT_NEAR(Lsd(x, Scaled(x, 2.0)), 20.0 * std::log10(2.0), 1e-6);
  const AudioBuffer y = WithNoise(x, 10.0, 7);
  EXPECT_DOUBLE_EQ(Lsd(x, y), Lsd(y, x));
  AudioBuffer z = x;
  z.samples.pop_back();
  EXPECT_EQ(ErrorCode([&] { Lsd(x, z); }), "metrics.length_mismatch");
}

TEST(Lsd, GrowsWithLossRate) {
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const AudioBuffer x = SynthClip(2.0, 110.0 + 30.0 * seed, 20 + seed);
    const std::size_t packets = PacketsFor(x.size());
    const double low = Lsd(x, ApplyTrace(x, GenerateTrace(packets, 0.1, 40 + seed)));
    const double high = Lsd(x, ApplyTrace(x, GenerateTrace(packets, 0.4, 40 + seed)));
    EXPECT_GT(high, low) << seed;
  }
}

std::vector<NamedClip> Corpus(int n) {
  std::vector<NamedClip> clips;
  for (int i = 0; i < n; ++i) {
    clips.push_back({"clip_" + std::to_string(i), SynthClip(2.0, 100.0 + 35.0 * i, 60 + i)});
  }
  return clips;
}

TEST(EvaluateCorpus, ZeroFillReport) {
  const auto clips = Corpus(4);
  EvaluateOptions opts;
  opts.seed = 9;
  const MetricsReport report = EvaluateCorpus(nullptr, ModelConfig::Reduced().stft, clips, opts);
  ASSERT_EQ(report.rows.size(), 16u);
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.method, kZeroFillMethod);
    EXPECT_GE(row.lsd_db, 0.0);
    EXPECT_LE(row.stoi, 1.0);
  }
  // Aggregates are the row means.
  std::map<double, std::pair<double, double>> sums;
  for (const auto& row : report.rows) {
    sums[row.rate].first += row.stoi;
    sums[row.rate].second += row.lsd_db;
  }
  ASSERT_EQ(report.aggregates.size(), 4u);
  double previous = 1.0;
  for (const auto& agg : report.aggregates) {
    EXPECT_NEAR(agg.stoi_mean, sums[agg.rate].first / 4.0, 1e-12);
    EXPECT_NEAR(agg.lsd_mean, sums[agg.rate].second / 4.0, 1e-12);
    EXPECT_LT(agg.stoi_mean, previous) << agg.rate;
    previous = agg.stoi_mean;
  }
  EXPECT_EQ(report.RowsCsv().substr(0, 29), "clip,rate,method,stoi,lsd_db\n");
  EXPECT_EQ(report.AggregatesCsv().substr(0, 35), "rate,method,stoi_mean,lsd_mean\n0.10");
}

TEST(EvaluateCorpus, DeterministicAcrossWorkerCounts) {
  const auto clips = Corpus(3);
  EvaluateOptions opts;
  opts.seed = 10;
  opts.rates = {0.2, 0.4};
  const std::string one = EvaluateCorpus(nullptr, ModelConfig::Reduced().stft, clips, opts).RowsCsv();
  opts.jobs = 3;
  const std::string three = EvaluateCorpus(nullptr, ModelConfig::Reduced().stft, clips, opts).RowsCsv();
  EXPECT_EQ(one, three);
  opts.seed = 11;
  EXPECT_NE(one, EvaluateCorpus(nullptr, ModelConfig::Reduced().stft, clips, opts).RowsCsv());
}

TEST(EvaluateCorpus, ModelRowsFollowZeroFillRows) {
  const ModelConfig model = ModelConfig::Reduced();
  Generator g(model.generator, 1);
  const auto clips = Corpus(2);
  EvaluateOptions opts;
  opts.rates = {0.3};
  opts.conceal.dropout = false;
  opts.conceal.gla_iters = 2;
  const MetricsReport report = EvaluateCorpus(&g, model.stft, clips, opts);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_EQ(report.rows[0].clip, "clip_0");
  EXPECT_EQ(report.rows[0].method, kModelMethod);
  EXPECT_EQ(report.rows[1].method, kZeroFillMethod);
  EXPECT_EQ(report.aggregates.size(), 2u);
}

TEST(EvaluateCorpus, Errors) {
  EvaluateOptions opts;
  EXPECT_EQ(ErrorCode([&] { EvaluateCorpus(nullptr, {}, {}, opts); }), "evaluate.empty");
  const auto clips = Corpus(1);
  opts.rates = {};
  EXPECT_EQ(ErrorCode([&] { EvaluateCorpus(nullptr, {}, clips, opts); }), "evaluate.bad_rates");
  opts.rates = {1.5};
  EXPECT_EQ(ErrorCode([&] { EvaluateCorpus(nullptr, {}, clips, opts); }), "trace.bad_rate");
}

TEST(EvaluationTraceSeed, DistinctPerClipAndRate) {
  std::set<uint64_t> seen;
  for (std::size_t c = 0; c < 20; ++c)
    for (std::size_t r = 0; r < 4; ++r) seen.insert(EvaluationTraceSeed(5, c, r));
  EXPECT_EQ(seen.size(), 80u);
}

}  // namespace
}  // namespace b2b
