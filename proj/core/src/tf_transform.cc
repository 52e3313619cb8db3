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

#include "b2b/tf_transform.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "b2b/error.h"
#include "b2b/fft.h"
#include "b2b/objectives.h"
#include "b2b/rng.h"

namespace b2b {
namespace {

void CheckParams(const StftParams& p) {
  if (p.window_len < 2 || p.hop < 1 || p.hop > p.window_len) {
    ThrowUsage("tf.bad_params", "invalid STFT window/hop");
  }
}

}  // namespace

std::vector<double> Hann(int len) {
  if (len < 2) ThrowUsage("tf.bad_window", "Hann window length must be >= 2");
  std::vector<double> w(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    w[static_cast<std::size_t>(n)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / len);
  }
  return w;
}

int NumFrames(std::size_t n_samples, const StftParams& params) {
  const auto win = static_cast<std::size_t>(params.window_len);
  if (n_samples < win) {
    ThrowUsage("tf.too_short", "signal shorter than one analysis window");
  }
  const auto hop = static_cast<std::size_t>(params.hop);
  return static_cast<int>((n_samples - win + hop - 1) / hop + 1);
}

std::size_t FrameSpan(int n_frames, const StftParams& params) {
  if (n_frames <= 0) return 0;
  return static_cast<std::size_t>(n_frames - 1) *
             static_cast<std::size_t>(params.hop) +
         static_cast<std::size_t>(params.window_len);
}

Spectrogram Stft(const AudioBuffer& buf, const StftParams& params) {
  CheckParams(params);
  const int n_frames = NumFrames(buf.size(), params);
  const int win = params.window_len;
  const std::vector<double> window = Hann(win);
  RealFft fft(win);

  Spectrogram spec;
  spec.params = params;
  spec.sample_rate_hz = buf.sample_rate_hz;
  spec.num_samples = buf.size();
  spec.bins.resize(params.n_freq(), n_frames);

  std::vector<double> frame(static_cast<std::size_t>(win));
  for (int t = 0; t < n_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * params.hop;
    for (int n = 0; n < win; ++n) {
      const std::size_t idx = start + static_cast<std::size_t>(n);
      const double x = idx < buf.size() ? buf.samples[idx] : 0.0;
      frame[static_cast<std::size_t>(n)] = x * window[static_cast<std::size_t>(n)];
    }
    fft.Forward(frame, std::span(spec.bins.col(t).data(),
                                 static_cast<std::size_t>(params.n_freq())));
  }
  return spec;
}

AudioBuffer Istft(const Spectrogram& spec) {
  CheckParams(spec.params);
  const StftParams& params = spec.params;
  if (spec.n_freq() != params.n_freq()) {
    ThrowUsage("tf.shape", "spectrogram rows do not match window length");
  }
  const int win = params.window_len;
  const std::size_t span = FrameSpan(spec.n_frames(), params);
  const std::size_t out_len = spec.num_samples == 0 ? span : spec.num_samples;
  const std::vector<double> window = Hann(win);
  RealFft fft(win);

  std::vector<double> acc(std::max(span, out_len), 0.0);
  std::vector<double> norm(acc.size(), 0.0);
  std::vector<double> frame(static_cast<std::size_t>(win));
  // Frames are added in order so the reduction is deterministic.
  for (int t = 0; t < spec.n_frames(); ++t) {
    fft.Inverse(std::span(spec.bins.col(t).data(),
                          static_cast<std::size_t>(params.n_freq())),
                frame);
    const std::size_t start = static_cast<std::size_t>(t) * params.hop;
    for (int n = 0; n < win; ++n) {
      const double w = window[static_cast<std::size_t>(n)];
      acc[start + static_cast<std::size_t>(n)] += w * frame[static_cast<std::size_t>(n)];
      norm[start + static_cast<std::size_t>(n)] += w * w;
    }
  }

  AudioBuffer out;
  out.sample_rate_hz = spec.sample_rate_hz;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    out.samples[i] = norm[i] > 1e-20 ? acc[i] / norm[i] : 0.0;
  }
  return out;
}

Eigen::MatrixXd Magnitude(const Spectrogram& spec) {
  return spec.bins.cwiseAbs();
}

Eigen::MatrixXd Phase(const Spectrogram& spec) {
  return spec.bins.unaryExpr([](const std::complex<double>& c) {
    return std::arg(c);
  });
}

Spectrogram FromPolar(const Eigen::MatrixXd& magnitude,
                      const Eigen::MatrixXd& phase, const StftParams& params,
                      std::size_t num_samples) {
  if (magnitude.rows() != phase.rows() || magnitude.cols() != phase.cols()) {
    ThrowUsage("tf.shape", "magnitude and phase shapes differ");
  }
  Spectrogram spec;
  spec.params = params;
  spec.num_samples = num_samples;
  spec.bins.resize(magnitude.rows(), magnitude.cols());
  for (Eigen::Index t = 0; t < magnitude.cols(); ++t) {
    for (Eigen::Index f = 0; f < magnitude.rows(); ++f) {
      spec.bins(f, t) = std::polar(magnitude(f, t), phase(f, t));
    }
  }
  return spec;
}

LogMagSpectrogram LogMag(const Spectrogram& spec) {
  const Eigen::MatrixXd mag = Magnitude(spec);
  return LogMag(mag, mag.size() > 0 ? mag.maxCoeff() : 0.0);
}

LogMagSpectrogram LogMag(const Eigen::MatrixXd& magnitude,
                         double reference_peak) {
  if (magnitude.rows() < 2) ThrowUsage("tf.shape", "need at least two rows");
  LogMagSpectrogram lm;
  lm.peak = reference_peak > 0.0 ? reference_peak : kLogEps;
  lm.nyquist_dropped = true;
  const Eigen::Index rows = magnitude.rows() - 1;
  lm.values.resize(rows, magnitude.cols());
  for (Eigen::Index t = 0; t < magnitude.cols(); ++t) {
    for (Eigen::Index f = 0; f < rows; ++f) {
      const double db = 20.0 * std::log10(magnitude(f, t) / lm.peak + kLogEps);
      const double clamped = std::clamp(db, kFloorDb, kCeilingDb);
      lm.values(f, t) =
          2.0 * (clamped - kFloorDb) / (kCeilingDb - kFloorDb) - 1.0;
    }
  }
  return lm;
}

Eigen::MatrixXd Denorm(const LogMagSpectrogram& lm, int* clamped_count) {
  int clamped = 0;
  const Eigen::Index extra = lm.nyquist_dropped ? 1 : 0;
  Eigen::MatrixXd mag = Eigen::MatrixXd::Zero(lm.values.rows() + extra,
                                              lm.values.cols());
  for (Eigen::Index t = 0; t < lm.values.cols(); ++t) {
    for (Eigen::Index f = 0; f < lm.values.rows(); ++f) {
      double v = lm.values(f, t);
      if (v < -1.0 || v > 1.0) {
        ++clamped;
        v = std::clamp(v, -1.0, 1.0);
      }
      mag(f, t) = v == 1.0 ? lm.peak
                           : lm.peak * std::pow(10.0, NormToDb(v) / 20.0);
    }
  }
  if (clamped_count) *clamped_count = clamped;
  return mag;
}

GriffinLimResult GriffinLim(const Eigen::MatrixXd& magnitude,
                            const PhaseInit& init, int n_iter,
                            const StftParams& params,
                            std::size_t num_samples) {
  if (n_iter < 0) ThrowUsage("gla.bad_iters", "iteration count must be >= 0");
  if (magnitude.rows() != params.n_freq()) {
    ThrowUsage("gla.shape", "magnitude rows do not match STFT size");
  }
  if ((magnitude.array() < 0.0).any()) {
    ThrowUsage("gla.negative", "magnitudes must be non-negative");
  }

  Eigen::MatrixXd phase;
  switch (init.kind) {
    case PhaseInit::Kind::kZero:
      phase = Eigen::MatrixXd::Zero(magnitude.rows(), magnitude.cols());
      break;
    case PhaseInit::Kind::kRandom: {
      SplitMix64 rng(init.seed);
      phase.resize(magnitude.rows(), magnitude.cols());
      for (Eigen::Index i = 0; i < phase.size(); ++i) {
        phase(i) = rng.Uniform(-std::numbers::pi, std::numbers::pi);
      }
      break;
    }
    case PhaseInit::Kind::kGiven:
      if (init.phase.rows() != magnitude.rows() ||
          init.phase.cols() != magnitude.cols()) {
        ThrowUsage("gla.shape", "initial phase shape differs from magnitude");
      }
      phase = init.phase;
      break;
  }

  if (num_samples == 0) num_samples = FrameSpan(static_cast<int>(magnitude.cols()), params);
  if (NumFrames(num_samples, params) != magnitude.cols()) {
    ThrowUsage("gla.shape", "frame count does not match signal length");
  }

  GriffinLimResult result;
  Spectrogram estimate = FromPolar(magnitude, phase, params, num_samples);
  AudioBuffer signal = Istft(estimate);
  for (int k = 0;; ++k) {
    const Spectrogram consistent = Stft(signal, params);
    result.sc_errors.push_back(
        SpectralConvergence(magnitude, Magnitude(consistent)));
    if (k == n_iter) break;
    for (Eigen::Index i = 0; i < magnitude.size(); ++i) {
      const std::complex<double> c = consistent.bins(i);
      estimate.bins(i) = std::polar(magnitude(i), std::arg(c));
    }
    signal = Istft(estimate);
  }
  result.audio = std::move(signal);
  return result;
}

void WriteSpectrogramCsv(const std::filesystem::path& path,
                         const LogMagSpectrogram& lm) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) ThrowData("dump.unwritable", "cannot write " + path.string());
  out << "freq_bin";
  for (int t = 0; t < lm.n_frames(); ++t) out << ",t" << t;
  out << '\n';
  char buf[32];
  for (int f = 0; f < lm.n_rows(); ++f) {
    out << f;
    for (int t = 0; t < lm.n_frames(); ++t) {
      std::snprintf(buf, sizeof(buf), ",%.6f", lm.values(f, t));
      out << buf;
    }
    out << '\n';
  }
}

void WriteSpectrogramPgm(const std::filesystem::path& path,
                         const LogMagSpectrogram& lm) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowData("dump.unwritable", "cannot write " + path.string());
  out << "P5\n" << lm.n_frames() << ' ' << lm.n_rows() << "\n255\n";
  std::string row(static_cast<std::size_t>(lm.n_frames()), '\0');
  for (int f = lm.n_rows() - 1; f >= 0; --f) {
    for (int t = 0; t < lm.n_frames(); ++t) {
      const double v = std::clamp(lm.values(f, t), -1.0, 1.0);
      row[static_cast<std::size_t>(t)] =
          static_cast<char>(static_cast<unsigned char>(std::lround((v + 1.0) * 127.5)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

}  // namespace b2b
