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


#include "b2b/metrics.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <thread>
#include <tuple>

#include "b2b/error.h"
#include "b2b/fft.h"
#include "b2b/loss_sim.h"
#include "b2b/rng.h"
#include "b2b/tf_transform.h"

namespace b2b {
namespace {

constexpr uint64_t kStreamEvaluation = 0xE7A1;

// Intelligibility analysis constants.
constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiHop = kStoiFrame / 2;
constexpr int kStoiFft = 512;
constexpr int kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr int kStoiSegment = 30;        // frames per envelope segment (384 ms)
constexpr double kStoiClipDb = -15.0;   // lower signal-to-distortion bound
constexpr double kStoiDynRange = 40.0;  // silence threshold below the loudest frame
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann of length n + 2 without its zero end points.
std::vector<double> StoiWindow() {
  std::vector<double> w(kStoiFrame);
  for (int k = 0; k < kStoiFrame; ++k) {
    w[static_cast<std::size_t>(k)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (k + 1) / (kStoiFrame + 1));
  }
  return w;
}

void RequireEqualLength(const char* what, const AudioBuffer& a, const AudioBuffer& b) {
  if (a.size() != b.size()) {
    ThrowUsage("metrics.length_mismatch", std::string(what) + ": lengths " +
                                              std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()) + " differ");
  }
}

// Drops frames more than kStoiDynRange dB below the loudest clean frame and
// overlap-adds the survivors of both signals.
void RemoveSilentFrames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = StoiWindow();
  std::vector<std::size_t> starts;
  std::vector<double> energy;
  for (std::size_t i = 0; i + kStoiFrame <= x.size(); i += kStoiHop) {
    double e = 0.0;
    for (int k = 0; k < kStoiFrame; ++k) {
      const double v = w[static_cast<std::size_t>(k)] * x[i + static_cast<std::size_t>(k)];
      e += v * v;
    }
    starts.push_back(i);
    energy.push_back(20.0 * std::log10(std::sqrt(e) + kEps));
  }
  if (starts.empty()) {
    x.clear();
    y.clear();
    return;
  }
  const double loudest = *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    if (loudest - kStoiDynRange - energy[f] < 0.0) kept.push_back(starts[f]);
  }
  const std::size_t n = kept.empty() ? 0 : (kept.size() - 1) * kStoiHop + kStoiFrame;
  std::vector<double> xs(n, 0.0), ys(n, 0.0);
  for (std::size_t f = 0; f < kept.size(); ++f) {
    for (int k = 0; k < kStoiFrame; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      xs[f * kStoiHop + ku] += w[ku] * x[kept[f] + ku];
      ys[f * kStoiHop + ku] += w[ku] * y[kept[f] + ku];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// One-third octave band matrix over the FFT bins: [band][bin] in {0, 1}.
std::vector<std::pair<int, int>> ThirdOctaveBands() {
  const int bins = kStoiFft / 2 + 1;
  auto nearest = [&](double hz) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * kStoiRate / kStoiFft;
      const double d = (f - hz) * (f - hz);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    return best;
  };
  std::vector<std::pair<int, int>> bands;
  for (int k = 0; k < kStoiBands; ++k) {
    const double lo = kStoiMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kStoiMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest(lo), nearest(hi));  // [lo, hi)
  }
  return bands;
}

// Band envelopes [band][frame].
std::vector<std::vector<double>> BandEnvelopes(const std::vector<double>& x) {
  static const auto bands = ThirdOctaveBands();
  const auto w = StoiWindow();
  RealFft fft(kStoiFft);
  std::vector<double> frame(kStoiFft, 0.0);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  std::vector<std::vector<double>> env(kStoiBands);
  for (std::size_t i = 0; i + kStoiFrame <= x.size(); i += kStoiHop) {
    for (int k = 0; k < kStoiFrame; ++k) {
      frame[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k)] * x[i + static_cast<std::size_t>(k)];
    }
    fft.Forward(frame, spec);
    for (int b = 0; b < kStoiBands; ++b) {
      double power = 0.0;
      for (int bin = bands[static_cast<std::size_t>(b)].first;
           bin < bands[static_cast<std::size_t>(b)].second; ++bin) {
        power += std::norm(spec[static_cast<std::size_t>(bin)]);
      }
      env[static_cast<std::size_t>(b)].push_back(std::sqrt(power));
    }
  }
  return env;
}

double Norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::string Fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<double> ResamplePoly(std::span<const double> x, int up, int down) {
  if (up < 1 || down < 1) ThrowUsage("resample.bad_ratio", "up and down must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  const int max_rate = std::max(up, down);
  const int half_len = 10 * max_rate;
  const int taps = 2 * half_len + 1;
  const double cutoff = 1.0 / max_rate;  // relative to Nyquist of the upsampled rate
  const double beta = 5.0;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (int n = 0; n < taps; ++n) {
    const double t = n - half_len;
    const double arg = cutoff * t;
    const double sinc = t == 0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = 2.0 * n / (taps - 1) - 1.0;
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                          std::cyl_bessel_i(0.0, beta);
    h[static_cast<std::size_t>(n)] = cutoff * sinc * kaiser;
    sum += h[static_cast<std::size_t>(n)];
  }
  for (double& v : h) v *= up / sum;

  const std::size_t n_in = x.size();
  const std::size_t n_out = (n_in * static_cast<std::size_t>(up) + down - 1) / down;
  std::vector<double> y(n_out, 0.0);
  for (std::size_t m = 0; m < n_out; ++m) {
    // Upsampled index whose filter centre lands on output m.
    const long centre = static_cast<long>(m) * down + half_len;
    const long j_lo = std::max(0L, (centre - (taps - 1) + up - 1) / up);
    const long j_hi = std::min(static_cast<long>(n_in) - 1, centre / up);
    double acc = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) {
      acc += x[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(centre - j * up)];
    }
    y[m] = acc;
  }
  return y;
}

double Stoi(const AudioBuffer& clean, const AudioBuffer& degraded) {
  RequireEqualLength("stoi", clean, degraded);
  std::vector<double> x = ResamplePoly(clean.samples, kStoiRate, clean.sample_rate_hz);
  std::vector<double> y = ResamplePoly(degraded.samples, kStoiRate, degraded.sample_rate_hz);
  RemoveSilentFrames(x, y);
  const auto xe = BandEnvelopes(x);
  const auto ye = BandEnvelopes(y);
  const int frames = static_cast<int>(xe[0].size());
  if (frames < kStoiSegment) {
    ThrowUsage("stoi.too_short", "only " + std::to_string(frames) +
                                     " non-silent frames; at least " +
                                     std::to_string(kStoiSegment) + " are needed");
  }
  const double clip = std::pow(10.0, -kStoiClipDb / 20.0);
  double total = 0.0;
  std::vector<double> xs(kStoiSegment), ys(kStoiSegment);
  for (int m = kStoiSegment; m <= frames; ++m) {
    for (int b = 0; b < kStoiBands; ++b) {
      const auto& xb = xe[static_cast<std::size_t>(b)];
      const auto& yb = ye[static_cast<std::size_t>(b)];
      for (int k = 0; k < kStoiSegment; ++k) {
        xs[static_cast<std::size_t>(k)] = xb[static_cast<std::size_t>(m - kStoiSegment + k)];
        ys[static_cast<std::size_t>(k)] = yb[static_cast<std::size_t>(m - kStoiSegment + k)];
      }
      const double gain = Norm(xs) / (Norm(ys) + kEps);
      for (int k = 0; k < kStoiSegment; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        ys[ku] = std::min(ys[ku] * gain, xs[ku] * (1.0 + clip));
      }
      const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / kStoiSegment;
      const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / kStoiSegment;
      for (int k = 0; k < kStoiSegment; ++k) {
        xs[static_cast<std::size_t>(k)] -= mx;
        ys[static_cast<std::size_t>(k)] -= my;
      }
      const double nx = Norm(xs) + kEps, ny = Norm(ys) + kEps;
      double corr = 0.0;
      for (int k = 0; k < kStoiSegment; ++k) {
        corr += (xs[static_cast<std::size_t>(k)] / nx) * (ys[static_cast<std::size_t>(k)] / ny);
      }
      total += corr;
    }
  }
  return total / (static_cast<double>(kStoiBands) * (frames - kStoiSegment + 1));
}

double Lsd(const AudioBuffer& clean, const AudioBuffer& degraded) {
  RequireEqualLength("lsd", clean, degraded);
  const Eigen::MatrixXd a = Magnitude(Stft(clean));
  const Eigen::MatrixXd b = Magnitude(Stft(degraded));
  const Eigen::ArrayXXd diff = 20.0 * ((a.array() + kLogEps).log10() - (b.array() + kLogEps).log10());
  return diff.square().colwise().mean().sqrt().mean();
}

std::string MetricsReport::RowsCsv() const {
  std::string out = "clip,rate,method,stoi,lsd_db\n";
  for (const auto& r : rows) {
    out += r.clip + ',' + Fixed(r.rate, 2) + ',' + r.method + ',' + Fixed(r.stoi, 6) + ',' +
           Fixed(r.lsd_db, 6) + '\n';
  }
  return out;
}

std::string MetricsReport::AggregatesCsv() const {
  std::string out = "rate,method,stoi_mean,lsd_mean\n";
  for (const auto& a : aggregates) {
    out += Fixed(a.rate, 2) + ',' + a.method + ',' + Fixed(a.stoi_mean, 6) + ',' +
           Fixed(a.lsd_mean, 6) + '\n';
  }
  return out;
}

void MetricsReport::Write(const std::filesystem::path& rows_csv,
                          const std::filesystem::path& aggregates_csv) const {
  for (const auto& [path, text] : {std::pair{rows_csv, RowsCsv()},
                                   std::pair{aggregates_csv, AggregatesCsv()}}) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) ThrowData("report.unwritable", "cannot write " + path.string());
    out << text;
  }
}

uint64_t EvaluationTraceSeed(uint64_t seed, std::size_t clip_index,
                             std::size_t rate_index) {
  return DeriveSeed(DeriveSeed(seed, kStreamEvaluation), (clip_index << 8) | rate_index);
}

MetricsReport EvaluateCorpus(Generator* generator, const StftParams& stft,
                             std::span<const NamedClip> clips,
                             const EvaluateOptions& options) {
  if (clips.empty()) ThrowUsage("evaluate.empty", "no clips to evaluate");
  if (options.rates.empty() || options.rates.size() > 255) {
    ThrowUsage("evaluate.bad_rates", "between 1 and 255 loss rates are required");
  }
  const std::size_t n_rates = options.rates.size();
  const std::size_t jobs_total = clips.size() * n_rates;
  const std::size_t per_job = generator ? 2 : 1;
  std::vector<MetricsRow> rows(jobs_total * per_job);
  std::vector<std::exception_ptr> errors(jobs_total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs_total; job = next++) {
      try {
        const std::size_t c = job / n_rates, r = job % n_rates;
        const NamedClip& clip = clips[c];
        const double rate = options.rates[r];
        const uint64_t seed = EvaluationTraceSeed(options.seed, c, r);
        const LossTrace trace = GenerateTrace(PacketsFor(clip.audio.size()), rate, seed);
        const AudioBuffer lossy = ApplyTrace(clip.audio, trace);
        rows[job * per_job] = {clip.id, rate, kZeroFillMethod, Stoi(clip.audio, lossy),
                               Lsd(clip.audio, lossy)};
        if (generator) {
          ConcealOptions conceal = options.conceal;
          conceal.dropout_seed = DeriveSeed(seed, 0xC0);
          const AudioBuffer out = Conceal(*generator, stft, lossy, conceal);
          rows[job * per_job + 1] = {clip.id, rate, kModelMethod, Stoi(clip.audio, out),
                                     Lsd(clip.audio, out)};
        }
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MetricsReport report;
  report.rows = std::move(rows);
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.clip, a.rate, a.method) < std::tie(b.clip, b.rate, b.method);
  });
  std::map<std::pair<double, std::string>, std::tuple<double, double, int>> sums;
  for (const auto& row : report.rows) {
    auto& [stoi, lsd, count] = sums[{row.rate, row.method}];
    stoi += row.stoi;
    lsd += row.lsd_db;
    ++count;
  }
  for (const auto& [key, value] : sums) {
    const auto& [stoi, lsd, count] = value;
    report.aggregates.push_back({key.first, key.second, stoi / count, lsd / count});
  }
  return report;
}

}  // namespace b2b
