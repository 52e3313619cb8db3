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


#ifndef B2B_METRICS_H_
#define B2B_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "b2b/audio_io.h"
#include "b2b/models.h"
#include "b2b/trainer.h"

namespace b2b {

// Rational polyphase resampler (Kaiser-windowed sinc, beta 5). Output has
// ceil(n * up / down) samples.
std::vector<double> ResamplePoly(std::span<const double> x, int up, int down);

// Short-time objective intelligibility of `degraded` against `clean`,
// both 16 kHz and of equal length. Throws when fewer than 30 analysis
// frames survive silence removal.
double Stoi(const AudioBuffer& clean, const AudioBuffer& degraded);

// Log-spectral distance in dB on the 512/64 STFT.
double Lsd(const AudioBuffer& clean, const AudioBuffer& degraded);

inline constexpr const char* kZeroFillMethod = "zero-fill";
inline constexpr const char* kModelMethod = "bin2bin";

struct MetricsRow {
  std::string clip;
  double rate = 0.0;
  std::string method;
  double stoi = 0.0;
  double lsd_db = 0.0;
};

struct MetricsAggregate {
  double rate = 0.0;
  std::string method;
  double stoi_mean = 0.0;
  double lsd_mean = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;              // sorted by (clip, rate, method)
  std::vector<MetricsAggregate> aggregates;  // sorted by (rate, method)

  // clip,rate,method,stoi,lsd_db
  std::string RowsCsv() const;
  // rate,method,stoi_mean,lsd_mean
  std::string AggregatesCsv() const;
  void Write(const std::filesystem::path& rows_csv,
             const std::filesystem::path& aggregates_csv) const;
};

struct NamedClip {
  std::string id;
  AudioBuffer audio;
};

struct EvaluateOptions {
  std::vector<double> rates = {0.1, 0.2, 0.3, 0.4};
  uint64_t seed = 0;
  int jobs = 1;
  ConcealOptions conceal;
};

// Scores zero-fill for every (clip, rate) and, when `generator` is given,
// the concealed signal as well. Traces come from an evaluation seed
// namespace disjoint from training.
MetricsReport EvaluateCorpus(Generator* generator, const StftParams& stft,
                             std::span<const NamedClip> clips,
                             const EvaluateOptions& options);

// Seed of the evaluation trace for clip `clip_index` at rate index `rate_index`.
uint64_t EvaluationTraceSeed(uint64_t seed, std::size_t clip_index,
                             std::size_t rate_index);

}  // namespace b2b

#endif  // B2B_METRICS_H_
