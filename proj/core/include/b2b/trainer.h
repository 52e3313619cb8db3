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


#ifndef B2B_TRAINER_H_
#define B2B_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "b2b/adam.h"
#include "b2b/audio_io.h"
#include "b2b/models.h"
#include "b2b/objectives.h"

namespace b2b {

enum class CropPolicy {
  kRandom,  // uniform start frame per example
  kTiled,   // cycle clips, then the half-overlapping tile grid of each clip
  kFixed,   // as kTiled, but each (clip, tile) example keeps its first trace
};

// What the discriminator sees next to the candidate.
enum class Conditioning {
  kLossy,  // real pair (lossy, clean), fake pair (lossy, G(lossy))
  kClean,  // real pair (clean, clean), fake pair (clean, G(lossy))
};

struct TrainConfig {
  ModelConfig model = ModelConfig::Full();
  int epochs = 50;
  int batch_size = 8;
  double lr = 2e-4;
  int n_g = 10;  // generator updates per discriminator update
  int patience = 5;
  // Discriminator updates per epoch; 0 derives one pass over the training
  // clips: ceil(n_train / (batch_size * (n_g + 1))).
  int cycles_per_epoch = 0;
  LossWeights weights;
  std::vector<double> rates = {0.1, 0.2, 0.3, 0.4};
  CropPolicy crop = CropPolicy::kRandom;
  Conditioning conditioning = Conditioning::kLossy;
  uint64_t seed = 0;

  void Validate() const;
};

// One network-sized training pair, normalized against the lossy clip peak.
struct Example {
  Eigen::MatrixXd input;   // rows x frames, lossy
  Eigen::MatrixXd target;  // rows x frames, clean
  double peak = 1.0;
  int start_frame = 0;
};

// Builds an example from `clip`. `start_frame` picks the crop; otherwise it
// is drawn from `seed`. A rate of 0 applies no loss.
Example MakeExample(const AudioBuffer& clip, double rate, uint64_t seed,
                    const ModelConfig& model,
                    std::optional<int> start_frame = std::nullopt);

// Start frames of the half-overlapping tiles covering `n_frames`; the last
// tile is aligned to the end.
std::vector<int> TileStarts(int n_frames, int window);

struct StepRecord {
  long step = 0;
  char phase = 'G';  // 'D' or 'G'
  double adv_d = 0.0;
  double adv_g = 0.0;
  double l_mag = 0.0;
  double l_sc = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double validation = 0.0;
  bool improved = false;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  long CountPhase(char phase) const;
  // step,phase,adv_d,adv_g,l_mag,l_sc
  void WriteStepsCsv(const std::filesystem::path& path) const;
  // epoch,validation,improved
  void WriteEpochsCsv(const std::filesystem::path& path) const;
};

struct TrainResult {
  Generator best_generator;   // generator of the best validation epoch
  Generator generator;        // final state
  Discriminator discriminator;
  AdamState g_adam;
  AdamState d_adam;
  TrainLog log;
  int best_epoch = 0;
  double best_validation = 0.0;
};

// Alternates one discriminator step with n_g generator steps, each on a
// fresh batch, and stops early after `patience` epochs without improvement.
TrainResult Train(const TrainConfig& config, std::span<const AudioBuffer> train,
                  std::span<const AudioBuffer> validation,
                  std::ostream* progress = nullptr);

// Normalized prediction for an example.
using Predictor = std::function<Eigen::MatrixXd(const Example&)>;

// Mean of (l_mag + l_sc) over validation clips and the rate grid, on
// seeded crops. The generator runs with running statistics, no dropout.
double Validate(Generator& generator, std::span<const AudioBuffer> clips,
                const ModelConfig& model, uint64_t seed,
                std::span<const double> rates);
double Validate(const Predictor& predict, std::span<const AudioBuffer> clips,
                const ModelConfig& model, uint64_t seed,
                std::span<const double> rates);

struct ConcealOptions {
  int gla_iters = 10;
  bool splice = false;
  bool dropout = true;
  uint64_t dropout_seed = 0;
  int max_batch = 8;
};

// Full resynthesis of `lossy` from generator magnitudes and Griffin-Lim
// seeded with the lossy phase. Output has the input's length.
AudioBuffer Conceal(Generator& generator, const StftParams& stft,
                    const AudioBuffer& lossy, const ConcealOptions& options = {});

// Maximal runs of exact zeros of at least `min_len` samples, as [begin, end).
std::vector<std::pair<std::size_t, std::size_t>> FindGaps(
    const AudioBuffer& buf, std::size_t min_len);

// Keeps `lossy` outside the gaps and `resynth` inside them, with raised-cosine
// cross-fades of `ramp` samples placed outside each gap.
AudioBuffer SpliceGaps(const AudioBuffer& lossy, const AudioBuffer& resynth,
                       std::size_t ramp);

}  // namespace b2b

#endif  // B2B_TRAINER_H_
