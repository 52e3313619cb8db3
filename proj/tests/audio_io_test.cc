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


#include "b2b/audio_io.h"

#include <cmath>
#include <cstring>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"

namespace b2b {
namespace {

using testing::ErrorCode;
using testing::ScratchDir;
using testing::WriteRawWav;

TEST(ReadWav, ZeroSecondIsZeroBuffer) {
  const auto dir = ScratchDir("wav_zero");
  WriteRawWav(dir / "z.wav", 16000, 1, std::vector<int16_t>(16000, 0));
  const AudioBuffer buf = ReadWav(dir / "z.wav");
  ASSERT_EQ(buf.size(), 16000u);
  EXPECT_EQ(buf.sample_rate_hz, 16000);
  for (double s : buf.samples) ASSERT_EQ(s, 0.0);
}

TEST(ReadWav, ScalesByFullRange) {
  const auto dir = ScratchDir("wav_scale");
  WriteRawWav(dir / "s.wav", 16000, 1, {-32768, 16384, 32767});
  const AudioBuffer buf = ReadWav(dir / "s.wav");
  EXPECT_EQ(buf.samples[0], -1.0);
  EXPECT_EQ(buf.samples[1], 0.5);
  EXPECT_EQ(buf.samples[2], 32767.0 / 32768.0);
}

TEST(ReadWav, ResamplesToPipelineRate) {
  const auto dir = ScratchDir("wav_rate");
  for (int rate : {8000, 22050, 44100}) {
    const int n = rate / 2;
    WriteRawWav(dir / "r.wav", rate, 1, std::vector<int16_t>(static_cast<std::size_t>(n), 100));
    const AudioBuffer buf = ReadWav(dir / "r.wav");
    EXPECT_EQ(buf.size(), static_cast<std::size_t>(std::lround(n * 16000.0 / rate))) << rate;
    EXPECT_EQ(buf.sample_rate_hz, 16000);
    EXPECT_NEAR(buf.samples[buf.size() / 2], 100.0 / 32768.0, 1e-12);
  }
}

TEST(ReadWav, AveragesStereo) {
  const auto dir = ScratchDir("wav_stereo");
  WriteRawWav(dir / "st.wav", 16000, 2, {16384, 0, -16384, -16384});
  const AudioBuffer buf = ReadWav(dir / "st.wav");
  ASSERT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.samples[0], 0.25);
  EXPECT_EQ(buf.samples[1], -0.5);
}

TEST(ReadWav, DistinctDiagnostics) {
  const auto dir = ScratchDir("wav_errors");
  EXPECT_EQ(ErrorCode([&] { ReadWav(dir / "absent.wav"); }), "wav.missing_file");
  std::ofstream(dir / "junk.wav") << "this is not a wave file at all";
  EXPECT_EQ(ErrorCode([&] { ReadWav(dir / "junk.wav"); }), "wav.malformed");
  WriteRawWav(dir / "float.wav", 16000, 1, {0, 0}, /*format_tag=*/3, /*bits=*/16);
  EXPECT_EQ(ErrorCode([&] { ReadWav(dir / "float.wav"); }), "wav.unsupported_encoding");
}

TEST(WriteWav, RoundTripWithinQuantization) {
  const auto dir = ScratchDir("wav_roundtrip");
  AudioBuffer ramp;
  for (int i = 0; i < 160; ++i) ramp.samples.push_back(-1.0 + 2.0 * i / 159.0);
  WriteWav(dir / "ramp.wav", ramp);
  const AudioBuffer back = ReadWav(dir / "ramp.wav");
  ASSERT_EQ(back.size(), ramp.size());
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    EXPECT_LE(std::abs(back.samples[i] - ramp.samples[i]), 1.0 / 32768.0) << i;
  }
}

TEST(WriteWav, ClampsOutOfRange) {
  const auto dir = ScratchDir("wav_clamp");
  WriteWav(dir / "c.wav", AudioBuffer{{1.5, -3.0}, 16000});
  const std::string bytes = testing::ReadFile(dir / "c.wav");
  int16_t first = 0, second = 0;
  std::memcpy(&first, bytes.data() + bytes.size() - 4, 2);
  std::memcpy(&second, bytes.data() + bytes.size() - 2, 2);
  EXPECT_EQ(first, 32767);
  EXPECT_EQ(second, -32768);
}

TEST(WriteWav, Errors) {
  const auto dir = ScratchDir("wav_write_errors");
  EXPECT_EQ(ErrorCode([&] { WriteWav(dir / "e.wav", AudioBuffer{}); }), "wav.empty_buffer");
  EXPECT_EQ(ErrorCode([&] { WriteWav(dir / "no" / "such" / "dir.wav", AudioBuffer{{0.1}, 16000}); }),
            "wav.unwritable");
}

TEST(SynthClip, DeterministicLengthAndPeak) {
  const AudioBuffer a = SynthClip(1.0, 120.0, 7);
  const AudioBuffer b = SynthClip(1.0, 120.0, 7);
  ASSERT_EQ(a.size(), 16000u);
  EXPECT_EQ(0, std::memcmp(a.samples.data(), b.samples.data(), a.size() * sizeof(double)));
  double peak = 0.0;
  for (double s : a.samples) peak = std::max(peak, std::abs(s));
  EXPECT_NEAR(peak, 0.9, 1e-6);
  EXPECT_NE(SynthClip(1.0, 120.0, 8).samples, a.samples);
}

TEST(SynthClip, RejectsBadArguments) {
  EXPECT_EQ(ErrorCode([] { SynthClip(0.0, 120.0, 1); }), "synth.bad_duration");
  EXPECT_EQ(ErrorCode([] { SynthClip(1.0, 59.0, 1); }), "synth.bad_f0");
  EXPECT_EQ(ErrorCode([] { SynthClip(1.0, 401.0, 1); }), "synth.bad_f0");
}

std::vector<std::string> Ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  return ids;
}

TEST(SplitCorpus, FloorAllocation) {
  const CorpusSplit s = SplitCorpus(Ids(10), {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  const CorpusSplit again = SplitCorpus(Ids(10), {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(s.train, again.train);
  EXPECT_EQ(s.validation, again.validation);
  EXPECT_EQ(s.test, again.test);
}

TEST(SplitCorpus, PartitionsForManySeeds) {
  const auto ids = Ids(23);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const CorpusSplit s = SplitCorpus(ids, {0.6, 0.2, 0.2}, seed);
    std::multiset<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    ASSERT_EQ(all, std::multiset<std::string>(ids.begin(), ids.end())) << seed;
  }
}

TEST(SplitCorpus, Errors) {
  EXPECT_EQ(ErrorCode([] { SplitCorpus(Ids(10), {0.5, 0.5, 0.1}, 0); }), "split.bad_ratio");
  EXPECT_EQ(ErrorCode([] { SplitCorpus(Ids(10), {1.0, 0.0, 0.0}, 0); }), "split.bad_ratio");
  EXPECT_EQ(ErrorCode([] { SplitCorpus({}, {0.8, 0.1, 0.1}, 0); }), "split.empty");
}

TEST(Manifest, RoundTripSkipsComments) {
  const auto dir = ScratchDir("manifest");
  std::ofstream(dir / "m.txt") << "# corpus\n\na.wav\nsub/b.wav\n";
  const auto paths = ReadManifest(dir / "m.txt");
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0], dir / "a.wav");
  EXPECT_EQ(paths[1], dir / "sub" / "b.wav");
  const std::vector<std::string> names = {"x.wav", "y.wav"};
  WriteManifest(dir / "w.txt", names);
  const auto back = ReadManifest(dir / "w.txt");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1], dir / "y.wav");
}

TEST(TrimSilence, DropsQuietEdges) {
  AudioBuffer buf;
  buf.samples.assign(3200, 0.0);
  for (int i = 0; i < 3200; ++i) buf.samples.push_back(0.5 * std::sin(0.1 * i));
  buf.samples.insert(buf.samples.end(), 1600, 1e-4);
  const AudioBuffer t = TrimSilence(buf, -40.0);
  EXPECT_EQ(t.size(), 3200u);
  EXPECT_EQ(t.samples[1], buf.samples[3201]);
}

}  // namespace
}  // namespace b2b
