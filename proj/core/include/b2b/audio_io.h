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

#ifndef B2B_AUDIO_IO_H_
#define B2B_AUDIO_IO_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace b2b {

inline constexpr int kSampleRateHz = 16000;

// Mono audio. Pipeline-internal buffers are always at kSampleRateHz.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = kSampleRateHz;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Reads a RIFF/WAVE PCM16 file (mono or stereo). Stereo is averaged to mono
// and any sample rate is linearly resampled to 16 kHz. Error codes:
// wav.missing_file, wav.malformed, wav.unsupported_encoding.
AudioBuffer ReadWav(const std::filesystem::path& path);

// Writes PCM16 mono at the buffer's sample rate. Samples are clamped to
// [-1, 1] and quantized with scale 32768.
void WriteWav(const std::filesystem::path& path, const AudioBuffer& buf);

// Linear-interpolation resampler. Output length is
// round(n * target_rate / source_rate).
AudioBuffer ResampleLinear(const AudioBuffer& buf, int target_rate_hz);

// Drops leading and trailing 20 ms frames whose RMS is below
// `threshold_dbfs`. Returns the input unchanged if every frame is quiet.
AudioBuffer TrimSilence(const AudioBuffer& buf, double threshold_dbfs = -40.0);

// Deterministic speech-like test signal: a vibrato impulse train shaped into
// syllables and passed through three time-varying formant resonators, plus
// white noise 30 dB below the signal, peak-normalized to 0.9.
AudioBuffer SynthClip(double duration_s, double f0_hz, uint64_t seed);

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

// Seeded shuffle followed by floor allocation of the validation and test
// shares; the remainder goes to train.
CorpusSplit SplitCorpus(std::span<const std::string> ids,
                        const std::array<double, 3>& ratios, uint64_t seed);

// Manifest: one path per line relative to the manifest's directory; blank
// lines and `#` comments are skipped. Returned paths are resolved.
std::vector<std::filesystem::path> ReadManifest(
    const std::filesystem::path& path);
void WriteManifest(const std::filesystem::path& path,
                   std::span<const std::string> relative_entries);

}  // namespace b2b

#endif  // B2B_AUDIO_IO_H_
