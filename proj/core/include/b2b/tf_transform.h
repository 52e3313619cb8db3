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

#ifndef B2B_TF_TRANSFORM_H_
#define B2B_TF_TRANSFORM_H_

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "b2b/audio_io.h"

namespace b2b {

// Analysis geometry. The canonical pipeline uses a 512-point Hann window
// (32 ms at 16 kHz) and a hop of 64 samples.
struct StftParams {
  int window_len = 512;
  int hop = 64;

  int n_freq() const { return window_len / 2 + 1; }
  bool operator==(const StftParams&) const = default;
};

inline constexpr double kLogEps = 1e-10;
inline constexpr double kFloorDb = -100.0;
inline constexpr double kCeilingDb = 0.0;

// Complex STFT, n_freq rows by n_frames columns. Frame t covers samples
// [t * hop, t * hop + window_len).
struct Spectrogram {
  Eigen::MatrixXcd bins;
  StftParams params;
  int sample_rate_hz = kSampleRateHz;
  std::size_t num_samples = 0;  // length of the analysed signal

  int n_freq() const { return static_cast<int>(bins.rows()); }
  int n_frames() const { return static_cast<int>(bins.cols()); }
};

// Normalized log-magnitude view with the Nyquist row removed. Values lie in
// [-1, 1]: -1 is kFloorDb and +1 is kCeilingDb relative to `peak`.
struct LogMagSpectrogram {
  Eigen::MatrixXd values;
  double peak = 1.0;
  bool nyquist_dropped = true;

  int n_rows() const { return static_cast<int>(values.rows()); }
  int n_frames() const { return static_cast<int>(values.cols()); }
};

// Periodic Hann: w[n] = 0.5 - 0.5 cos(2 pi n / len). len >= 2.
std::vector<double> Hann(int len);

// ceil((n - window_len) / hop) + 1. Requires n >= window_len.
int NumFrames(std::size_t n_samples, const StftParams& params);
// Samples spanned by `n_frames` consecutive frames.
std::size_t FrameSpan(int n_frames, const StftParams& params);

// Hann-windowed STFT. The tail is zero-padded so every sample is covered.
Spectrogram Stft(const AudioBuffer& buf, const StftParams& params = {});

// Least-squares inverse (weighted overlap-add normalized by the summed
// squared window). Output has spec.num_samples samples.
AudioBuffer Istft(const Spectrogram& spec);

Eigen::MatrixXd Magnitude(const Spectrogram& spec);
Eigen::MatrixXd Phase(const Spectrogram& spec);
Spectrogram FromPolar(const Eigen::MatrixXd& magnitude,
                      const Eigen::MatrixXd& phase, const StftParams& params,
                      std::size_t num_samples);

// Normalizes against the spectrogram's own peak magnitude.
LogMagSpectrogram LogMag(const Spectrogram& spec);
// Normalizes a full-height magnitude matrix (n_freq rows) against an
// explicit reference peak. A zero peak is replaced by the kLogEps sentinel.
LogMagSpectrogram LogMag(const Eigen::MatrixXd& magnitude,
                         double reference_peak);

// Inverse of LogMag. Returns n_rows + 1 rows with a zero Nyquist row
// re-inserted. Values outside [-1, 1] are clamped and counted.
Eigen::MatrixXd Denorm(const LogMagSpectrogram& lm,
                       int* clamped_count = nullptr);

// Maps a normalized value to dB relative to the peak and back.
inline double NormToDb(double v) {
  return kFloorDb + (v + 1.0) * 0.5 * (kCeilingDb - kFloorDb);
}

struct PhaseInit {
  enum class Kind { kZero, kRandom, kGiven };
  Kind kind = Kind::kZero;
  uint64_t seed = 0;
  Eigen::MatrixXd phase;  // used when kind == kGiven

  static PhaseInit Zero() { return {}; }
  static PhaseInit Random(uint64_t seed) { return {Kind::kRandom, seed, {}}; }
  static PhaseInit Given(Eigen::MatrixXd phase) {
    return {Kind::kGiven, 0, std::move(phase)};
  }
};

struct GriffinLimResult {
  AudioBuffer audio;
  // sc_errors[k] is the spectral convergence of the signal obtained after k
  // iterations against the target magnitude, k = 0..n_iter.
  std::vector<double> sc_errors;
};

// Classical Griffin-Lim projections starting from magnitude * exp(i * init).
GriffinLimResult GriffinLim(const Eigen::MatrixXd& magnitude,
                            const PhaseInit& init, int n_iter,
                            const StftParams& params, std::size_t num_samples);

// Spectrogram dumps. CSV has frames as columns and a leading `freq_bin`
// column; PGM is 8-bit with value (v + 1) * 127.5 and low frequencies at
// the bottom.
void WriteSpectrogramCsv(const std::filesystem::path& path,
                         const LogMagSpectrogram& lm);
void WriteSpectrogramPgm(const std::filesystem::path& path,
                         const LogMagSpectrogram& lm);

}  // namespace b2b

#endif  // B2B_TF_TRANSFORM_H_
