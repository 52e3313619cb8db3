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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "b2b/error.h"
#include "b2b/rng.h"

namespace b2b {
namespace {

constexpr double kPcmScale = 32768.0;
constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t ReadU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void PutU16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

// Two-pole resonator with roughly unit gain at its center frequency.
class Resonator {
 public:
  void Set(double center_hz, double bandwidth_hz, double fs) {
    const double r = std::exp(-std::numbers::pi * bandwidth_hz / fs);
    const double theta = 2.0 * std::numbers::pi * center_hz / fs;
    a1_ = -2.0 * r * std::cos(theta);
    a2_ = r * r;
    gain_ = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }
  double Process(double x) {
    const double y = gain_ * x - a1_ * y1_ - a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0.0, a2_ = 0.0, gain_ = 1.0;
  double y1_ = 0.0, y2_ = 0.0;
};

struct Syllable {
  double start_s;
  double end_s;
  std::array<double, 3> formants_hz;
};

}  // namespace

AudioBuffer ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("wav.missing_file", "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
      std::memcmp(data + 8, "WAVE", 4) != 0) {
    ThrowData("wav.malformed", path.string() + ": not a RIFF/WAVE file");
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = data + pos;
    const uint32_t chunk_size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + 16 > size) {
        ThrowData("wav.malformed", path.string() + ": truncated fmt chunk");
      }
      format = ReadU16(data + body);
      channels = ReadU16(data + body + 2);
      rate = ReadU32(data + body + 4);
      bits = ReadU16(data + body + 14);
      if (format == kFormatExtensible && chunk_size >= 26 &&
          body + 26 <= size) {
        format = ReadU16(data + body + 24);  // sub-format GUID prefix
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = data + body;
      pcm_bytes = std::min<std::size_t>(chunk_size, size - body);
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt || pcm == nullptr) {
    ThrowData("wav.malformed", path.string() + ": missing fmt or data chunk");
  }
  if (format != kFormatPcm || bits != 16) {
    std::ostringstream msg;
    msg << path.string() << ": unsupported encoding (format " << format
        << ", " << bits << " bits); only PCM16 is supported";
    ThrowData("wav.unsupported_encoding", msg.str());
  }
  if (channels != 1 && channels != 2) {
    ThrowData("wav.unsupported_encoding",
              path.string() + ": only mono or stereo files are supported");
  }
  if (rate == 0) ThrowData("wav.malformed", path.string() + ": zero rate");

  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = pcm_bytes / frame_bytes;
  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(rate);
  buf.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const auto v = static_cast<int16_t>(ReadU16(pcm + i * frame_bytes + 2 * c));
      acc += v / kPcmScale;
    }
    buf.samples[i] = acc / channels;
  }
  if (buf.sample_rate_hz != kSampleRateHz) {
    buf = ResampleLinear(buf, kSampleRateHz);
  }
  return buf;
}

void WriteWav(const std::filesystem::path& path, const AudioBuffer& buf) {
  if (buf.empty()) ThrowUsage("wav.empty_buffer", "cannot write empty buffer");
  const auto data_bytes = static_cast<uint32_t>(buf.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  PutU32(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  PutU32(out, 16);
  PutU16(out, kFormatPcm);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(buf.sample_rate_hz));
  PutU32(out, static_cast<uint32_t>(buf.sample_rate_hz) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out.append("data");
  PutU32(out, data_bytes);
  for (double s : buf.samples) {
    const double q = std::round(std::clamp(s, -1.0, 1.0) * kPcmScale);
    const auto v = static_cast<int16_t>(std::clamp(q, -32768.0, 32767.0));
    PutU16(out, static_cast<uint16_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) ThrowData("wav.unwritable", "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) ThrowData("wav.unwritable", "write failed: " + path.string());
}

AudioBuffer ResampleLinear(const AudioBuffer& buf, int target_rate_hz) {
  if (target_rate_hz <= 0 || buf.sample_rate_hz <= 0) {
    ThrowUsage("resample.bad_rate", "sample rates must be positive");
  }
  AudioBuffer out;
  out.sample_rate_hz = target_rate_hz;
  if (buf.empty()) return out;
  const double ratio =
      static_cast<double>(buf.sample_rate_hz) / target_rate_hz;
  const auto n_out = static_cast<std::size_t>(std::llround(
      static_cast<double>(buf.size()) * target_rate_hz / buf.sample_rate_hz));
  out.samples.resize(n_out);
  const std::size_t last = buf.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double src = static_cast<double>(i) * ratio;
    const auto i0 = std::min(static_cast<std::size_t>(src), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = src - static_cast<double>(i0);
    out.samples[i] = buf.samples[i0] + frac * (buf.samples[i1] - buf.samples[i0]);
  }
  return out;
}

AudioBuffer TrimSilence(const AudioBuffer& buf, double threshold_dbfs) {
  const std::size_t frame = static_cast<std::size_t>(buf.sample_rate_hz) / 50;
  if (frame == 0 || buf.size() < frame) return buf;
  const std::size_t n_frames = buf.size() / frame;
  auto loud = [&](std::size_t f) {
    double energy = 0.0;
    for (std::size_t i = f * frame; i < (f + 1) * frame; ++i) {
      energy += buf.samples[i] * buf.samples[i];
    }
    const double rms = std::sqrt(energy / static_cast<double>(frame));
    return 20.0 * std::log10(rms + 1e-10) >= threshold_dbfs;
  };
  std::size_t first = 0;
  while (first < n_frames && !loud(first)) ++first;
  if (first == n_frames) return buf;
  std::size_t last = n_frames - 1;
  while (last > first && !loud(last)) --last;
  const std::size_t begin = first * frame;
  // Keep the partial tail frame when the last full frame is loud.
  const std::size_t end =
      (last == n_frames - 1) ? buf.size() : (last + 1) * frame;
  AudioBuffer out;
  out.sample_rate_hz = buf.sample_rate_hz;
  out.samples.assign(buf.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     buf.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

AudioBuffer SynthClip(double duration_s, double f0_hz, uint64_t seed) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    ThrowUsage("synth.bad_duration", "duration must be positive");
  }
  if (!(f0_hz >= 60.0 && f0_hz <= 400.0)) {
    ThrowUsage("synth.bad_f0", "f0 must lie in [60, 400] Hz");
  }
  const double fs = kSampleRateHz;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  SplitMix64 rng(seed);

  const double vibrato_rate = rng.Uniform(4.0, 7.0);
  const double vibrato_phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);

  std::vector<Syllable> syllables;
  for (double t = rng.Uniform(0.0, 0.05); t < duration_s;) {
    const double len = rng.Uniform(0.12, 0.28);
    Syllable s{t, std::min(t + len, duration_s),
               {rng.Uniform(300.0, 900.0), rng.Uniform(900.0, 2500.0),
                rng.Uniform(2500.0, 3500.0)}};
    syllables.push_back(s);
    t += len + rng.Uniform(0.02, 0.08);
  }

  std::array<Resonator, 3> formants;
  constexpr std::array<double, 3> kBandwidthsHz = {80.0, 120.0, 160.0};
  std::vector<double> out(n, 0.0);
  double glottal_phase = 1.0;  // emit an impulse at t = 0
  std::size_t syl = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    while (syl + 1 < syllables.size() && t >= syllables[syl].end_s) ++syl;
    const Syllable& cur = syllables[syl];

    // Formant tracks glide linearly toward the next syllable's targets.
    const Syllable& next = syllables[std::min(syl + 1, syllables.size() - 1)];
    const double span = std::max(next.start_s - cur.start_s, 1e-3);
    const double glide = std::clamp((t - cur.start_s) / span, 0.0, 1.0);
    if (i % 32 == 0) {
      for (int k = 0; k < 3; ++k) {
        const double fc = cur.formants_hz[k] +
                          glide * (next.formants_hz[k] - cur.formants_hz[k]);
        formants[k].Set(fc, kBandwidthsHz[k], fs);
      }
    }

    double envelope = 0.0;
    if (t >= cur.start_s && t < cur.end_s) {
      const double u = (t - cur.start_s) / (cur.end_s - cur.start_s);
      envelope = std::sin(std::numbers::pi * u);
      envelope *= envelope;
    }

    const double f_inst =
        f0_hz * (1.0 + 0.1 * std::sin(2.0 * std::numbers::pi * vibrato_rate * t +
                                      vibrato_phase));
    glottal_phase += f_inst / fs;
    double excitation = 0.0;
    if (glottal_phase >= 1.0) {
      glottal_phase -= std::floor(glottal_phase);
      excitation = 1.0;
    }
    double y = excitation * envelope;
    for (auto& r : formants) y = r.Process(y);
    out[i] = y;
  }

  double energy = 0.0;
  for (double v : out) energy += v * v;
  const double rms = std::sqrt(energy / std::max<double>(1.0, static_cast<double>(n)));
  const double noise_rms = rms * std::pow(10.0, -30.0 / 20.0);
  for (double& v : out) v += noise_rms * rng.Normal();

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  AudioBuffer buf;
  buf.samples = std::move(out);
  if (peak > 0.0) {
    const double gain = 0.9 / peak;
    for (double& v : buf.samples) v *= gain;
  }
  return buf;
}

CorpusSplit SplitCorpus(std::span<const std::string> ids,
                        const std::array<double, 3>& ratios, uint64_t seed) {
  if (ids.empty()) ThrowUsage("split.empty", "corpus id list is empty");
  for (double r : ratios) {
    if (!(r > 0.0)) ThrowUsage("split.bad_ratio", "ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    ThrowUsage("split.bad_ratio", "ratios must sum to 1");
  }
  std::vector<std::string> shuffled(ids.begin(), ids.end());
  SplitMix64 rng(seed);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.Below(i)]);
  }
  const std::size_t n = shuffled.size();
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios[1]));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios[2]));
  const std::size_t n_train = n - n_val - n_test;

  CorpusSplit split;
  auto it = shuffled.begin();
  split.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  it += static_cast<std::ptrdiff_t>(n_train);
  split.validation.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
  it += static_cast<std::ptrdiff_t>(n_val);
  split.test.assign(it, shuffled.end());
  return split;
}

std::vector<std::filesystem::path> ReadManifest(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ThrowData("manifest.missing_file", "cannot open " + path.string());
  const auto base = path.parent_path();
  std::vector<std::filesystem::path> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::filesystem::path entry(line.substr(first, last - first + 1));
    entries.push_back(entry.is_absolute() ? entry : base / entry);
  }
  return entries;
}

void WriteManifest(const std::filesystem::path& path,
                   std::span<const std::string> relative_entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) ThrowData("manifest.unwritable", "cannot write " + path.string());
  out << "# b2b corpus manifest\n";
  for (const auto& e : relative_entries) out << e << '\n';
}

}  // namespace b2b
