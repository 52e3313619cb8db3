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


#include "b2b/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include "b2b/error.h"
#include "b2b/loss_sim.h"
#include "b2b/rng.h"
#include "b2b/tf_transform.h"

namespace b2b {
namespace {

// Seed streams. Evaluation uses its own namespace in metrics.cc.
constexpr uint64_t kStreamGenerator = 0x47;
constexpr uint64_t kStreamDiscriminator = 0x44;
constexpr uint64_t kStreamData = 0xDA7A;
constexpr uint64_t kStreamDropout = 0xD0;
constexpr uint64_t kStreamValidation = 0x7A11;

constexpr std::size_t kMinGapSamples = kPacketSamples / 2;
constexpr std::size_t kSpliceRamp = kSampleRateHz * 5 / 1000;

// Packs row-major [N, 1, rows, cols] from column-major matrices.
Tensor Pack(const std::vector<const Eigen::MatrixXd*>& mats) {
  const int n = static_cast<int>(mats.size());
  const int rows = static_cast<int>(mats[0]->rows());
  const int cols = static_cast<int>(mats[0]->cols());
  std::vector<double> v(static_cast<std::size_t>(n) * rows * cols);
  std::size_t k = 0;
  for (const auto* m : mats) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) v[k++] = (*m)(r, c);
    }
  }
  return Tensor::FromVector({n, 1, rows, cols}, std::move(v));
}

Eigen::MatrixXd Unpack(const Tensor& t, int item) {
  const int rows = t.dim(2), cols = t.dim(3);
  Eigen::MatrixXd m(rows, cols);
  const std::size_t base = static_cast<std::size_t>(item) * rows * cols;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = t.at(base + static_cast<std::size_t>(r) * cols + c);
  }
  return m;
}

// Linear magnitudes of normalized values, Nyquist row left out.
Eigen::MatrixXd ToMagnitude(const Eigen::MatrixXd& normalized, double peak) {
  return Denorm({normalized, peak, true}).topRows(normalized.rows());
}

void CheckFinite(double v, const char* what, long step) {
  if (!std::isfinite(v)) {
    ThrowNumeric("train.diverged", std::string(what) + " is not finite at step " +
                                       std::to_string(step));
  }
}

// Excludes a network from gradient computation while in scope.
class FrozenParams {
 public:
  explicit FrozenParams(std::vector<Tensor>& params) : params_(params) {
    for (auto& p : params_) p.set_requires_grad(false);
  }
  ~FrozenParams() {
    for (auto& p : params_) p.set_requires_grad(true);
  }

 private:
  std::vector<Tensor>& params_;
};

struct Batch {
  Tensor input;
  Tensor target;
  std::vector<double> peaks;
};

class BatchSource {
 public:
  BatchSource(const TrainConfig& config, std::span<const AudioBuffer> clips)
      : config_(config), clips_(clips) {
    if (config.crop != CropPolicy::kRandom) {
      for (const auto& clip : clips) {
        tiles_.push_back(TileStarts(NumFrames(clip.size(), config.model.stft),
                                    config.model.frames()));
        max_tiles_ = std::max(max_tiles_, tiles_.back().size());
      }
    }
  }

  Batch Next() {
    std::vector<Example> examples;
    for (int b = 0; b < config_.batch_size; ++b) examples.push_back(NextExample());
    std::vector<const Eigen::MatrixXd*> in, tgt;
    Batch batch;
    for (const auto& e : examples) {
      in.push_back(&e.input);
      tgt.push_back(&e.target);
      batch.peaks.push_back(e.peak);
    }
    batch.input = Pack(in);
    batch.target = Pack(tgt);
    return batch;
  }

 private:
  Example NextExample() {
    uint64_t index = counter_++;
    if (config_.crop == CropPolicy::kFixed) index %= clips_.size() * max_tiles_;
    const uint64_t seed = DeriveSeed(DeriveSeed(config_.seed, kStreamData), index);
    SplitMix64 rng(seed);
    const double rate = config_.rates[rng.Below(config_.rates.size())];
    const std::size_t n = clips_.size();
    if (config_.crop != CropPolicy::kRandom) {
      const std::size_t clip = index % n;
      const auto& tiles = tiles_[clip];
      const int start = tiles[(index / n) % tiles.size()];
      return MakeExample(clips_[clip], rate, rng.Next(), config_.model, start);
    }
    const std::size_t clip = rng.Below(n);
    return MakeExample(clips_[clip], rate, rng.Next(), config_.model);
  }

  const TrainConfig& config_;
  std::span<const AudioBuffer> clips_;
  std::vector<std::vector<int>> tiles_;
  std::size_t max_tiles_ = 0;
  uint64_t counter_ = 0;
};

std::string CsvNumber(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void TrainConfig::Validate() const {
  if (epochs < 1 || batch_size < 1 || n_g < 1 || patience < 1 ||
      cycles_per_epoch < 0 || !(lr > 0.0)) {
    ThrowUsage("train.bad_config",
               "epochs, batch size, n_g, patience and lr must be positive");
  }
  if (weights.magnitude < 0.0 || weights.convergence < 0.0) {
    ThrowUsage("train.bad_config", "loss weights must be non-negative");
  }
  if (rates.empty()) ThrowUsage("train.bad_config", "empty loss-rate grid");
  for (double r : rates) {
    if (!(r > 0.0 && r < 1.0)) ThrowUsage("train.bad_config", "loss rates must lie in (0, 1)");
  }
  if (model.stft.n_freq() - 1 != model.rows()) {
    ThrowUsage("train.bad_config",
               "STFT window " + std::to_string(model.stft.window_len) +
                   " does not yield " + std::to_string(model.rows()) + " rows");
  }
}

Example MakeExample(const AudioBuffer& clip, double rate, uint64_t seed,
                    const ModelConfig& model, std::optional<int> start_frame) {
  const StftParams& p = model.stft;
  const int window = model.frames();
  if (p.n_freq() - 1 != model.rows()) {
    ThrowUsage("train.bad_config", "STFT geometry does not match the network size");
  }
  const std::size_t need = FrameSpan(window, p);
  if (clip.size() < need) {
    ThrowUsage("train.clip_too_short", "clip has " + std::to_string(clip.size()) +
                                           " samples, an example needs " +
                                           std::to_string(need));
  }
  if (rate < 0.0 || rate >= 1.0) ThrowUsage("trace.bad_rate", "rate must lie in [0, 1)");
  AudioBuffer lossy = clip;
  const std::size_t packets = PacketsFor(clip.size());
  if (rate > 0.0 && packets > 0) {
    lossy = ApplyTrace(clip, GenerateTrace(packets, rate, DeriveSeed(seed, 1)));
  }
  const Eigen::MatrixXd lossy_mag = Magnitude(Stft(lossy, p));
  const Eigen::MatrixXd clean_mag = Magnitude(Stft(clip, p));
  const int frames = static_cast<int>(clean_mag.cols());
  int start = 0;
  if (start_frame) {
    start = *start_frame;
    if (start < 0 || start + window > frames) {
      ThrowUsage("train.bad_crop", "crop start " + std::to_string(start) + " out of range");
    }
  } else {
    SplitMix64 rng(DeriveSeed(seed, 2));
    start = static_cast<int>(rng.Below(static_cast<uint64_t>(frames - window + 1)));
  }
  Example ex;
  ex.peak = lossy_mag.maxCoeff();
  ex.input = LogMag(lossy_mag, ex.peak).values.middleCols(start, window);
  ex.target = LogMag(clean_mag, ex.peak).values.middleCols(start, window);
  ex.peak = std::max(ex.peak, kLogEps);
  ex.start_frame = start;
  return ex;
}

std::vector<int> TileStarts(int n_frames, int window) {
  if (window < 1 || n_frames < window) {
    ThrowUsage("conceal.too_short", std::to_string(n_frames) +
                                        " frames cannot hold a " +
                                        std::to_string(window) + "-frame window");
  }
  const int hop = std::max(1, window / 2);
  std::vector<int> starts;
  for (int s = 0; s + window <= n_frames; s += hop) starts.push_back(s);
  if (starts.back() + window < n_frames) starts.push_back(n_frames - window);
  return starts;
}

long TrainLog::CountPhase(char phase) const {
  return std::count_if(steps.begin(), steps.end(),
                       [phase](const StepRecord& r) { return r.phase == phase; });
}

void TrainLog::WriteStepsCsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) ThrowData("log.unwritable", "cannot write " + path.string());
  out << "step,phase,adv_d,adv_g,l_mag,l_sc\n";
  for (const auto& r : steps) {
    out << r.step << ',' << r.phase << ',' << CsvNumber(r.adv_d) << ','
        << CsvNumber(r.adv_g) << ',' << CsvNumber(r.l_mag) << ','
        << CsvNumber(r.l_sc) << '\n';
  }
}

void TrainLog::WriteEpochsCsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) ThrowData("log.unwritable", "cannot write " + path.string());
  out << "epoch,validation,improved\n";
  for (const auto& r : epochs) {
    out << r.epoch << ',' << CsvNumber(r.validation) << ',' << (r.improved ? 1 : 0) << '\n';
  }
}

TrainResult Train(const TrainConfig& config, std::span<const AudioBuffer> train,
                  std::span<const AudioBuffer> validation, std::ostream* progress) {
  config.Validate();
  if (train.empty() || validation.empty()) {
    ThrowUsage("train.empty_split", "training and validation sets must be non-empty");
  }
  const ModelConfig& model = config.model;
  Generator g(model.generator, DeriveSeed(config.seed, kStreamGenerator));
  Discriminator d(model.discriminator, DeriveSeed(config.seed, kStreamDiscriminator));
  std::vector<Tensor> g_params = g.Parameters();
  std::vector<Tensor> d_params = d.Parameters();
  AdamState g_adam, d_adam;
  g_adam.lr = d_adam.lr = config.lr;

  BatchSource source(config, train);
  const long per_cycle = static_cast<long>(config.batch_size) * (config.n_g + 1);
  const long cycles = config.cycles_per_epoch > 0
                          ? config.cycles_per_epoch
                          : std::max(1L, (static_cast<long>(train.size()) + per_cycle - 1) / per_cycle);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const uint64_t dropout_root = DeriveSeed(config.seed, kStreamDropout);
  const bool clean_condition = config.conditioning == Conditioning::kClean;

  TrainLog log;
  std::optional<Generator> best;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0, stale = 0;
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (long c = 0; c < cycles; ++c) {
      {
        Batch batch = source.Next();
        const ForwardOptions opts{true, true, DeriveSeed(dropout_root, static_cast<uint64_t>(step))};
        Tensor fake;
        {
          NoGradGuard no_grad;
          fake = g.Forward(batch.input, opts);
        }
        const Tensor& cond = clean_condition ? batch.target : batch.input;
        const Tensor real_logits = d.Forward(cond, batch.target, opts);
        const Tensor fake_logits = d.Forward(cond, fake, opts);
        const Tensor loss = DiscriminatorLoss(real_logits, fake_logits);
        CheckFinite(loss.item(), "discriminator loss", step);
        loss.Backward();
        AdamStep(d_params, d_adam);
        ZeroGrad(d_params);
        log.steps.push_back({step++, 'D', loss.item(), nan, nan, nan});
      }
      for (int k = 0; k < config.n_g; ++k) {
        Batch batch = source.Next();
        const ForwardOptions opts{true, true, DeriveSeed(dropout_root, static_cast<uint64_t>(step))};
        FrozenParams frozen(d_params);
        const Tensor fake = g.Forward(batch.input, opts);
        const Tensor& cond = clean_condition ? batch.target : batch.input;
        const Tensor adv = GeneratorAdversarialLoss(d.Forward(cond, fake, opts));
        const Tensor reference = DenormMagnitude(batch.target, batch.peaks);
        const Tensor estimate = DenormMagnitude(fake, batch.peaks);
        const Tensor l_mag = LogStftMagnitudeLoss(reference, estimate);
        const Tensor l_sc = SpectralConvergence(reference, estimate);
        const Tensor total = TotalGeneratorLoss(adv, l_mag, l_sc, config.weights);
        CheckFinite(total.item(), "generator loss", step);
        total.Backward();
        AdamStep(g_params, g_adam);
        ZeroGrad(g_params);
        log.steps.push_back({step++, 'G', nan, adv.item(), l_mag.item(), l_sc.item()});
      }
    }
    const double val = Validate(g, validation, model,
                                DeriveSeed(config.seed, kStreamValidation), config.rates);
    CheckFinite(val, "validation loss", step);
    const bool improved = val < best_val;
    log.epochs.push_back({epoch, val, improved});
    if (progress) {
      const StepRecord& last = log.steps.back();
      *progress << "epoch " << epoch << " steps " << step << " l_mag " << last.l_mag
                << " l_sc " << last.l_sc << " validation " << val
                << (improved ? " *" : "") << std::endl;
    }
    if (improved) {
      best_val = val;
      best_epoch = epoch;
      best.emplace(g.Clone());
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }

  return TrainResult{std::move(*best), std::move(g), std::move(d), std::move(g_adam),
                     std::move(d_adam), std::move(log), best_epoch, best_val};
}

double Validate(Generator& generator, std::span<const AudioBuffer> clips,
                const ModelConfig& model, uint64_t seed,
                std::span<const double> rates) {
  NoGradGuard no_grad;
  const ForwardOptions opts{false, false, 0};
  return Validate(
      [&](const Example& ex) {
        return Unpack(generator.Forward(Pack({&ex.input}), opts), 0);
      },
      clips, model, seed, rates);
}

double Validate(const Predictor& predict, std::span<const AudioBuffer> clips,
                const ModelConfig& model, uint64_t seed,
                std::span<const double> rates) {
  if (clips.empty() || rates.empty()) {
    ThrowUsage("validate.empty", "validation needs clips and rates");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    for (std::size_t r = 0; r < rates.size(); ++r) {
      const Example ex = MakeExample(clips[i], rates[r],
                                     DeriveSeed(seed, i * rates.size() + r), model);
      const Eigen::MatrixXd reference = ToMagnitude(ex.target, ex.peak);
      const Eigen::MatrixXd estimate = ToMagnitude(predict(ex), ex.peak);
      total += LogStftMagnitudeLoss(reference, estimate) +
               SpectralConvergence(reference, estimate);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

AudioBuffer Conceal(Generator& generator, const StftParams& stft,
                    const AudioBuffer& lossy, const ConcealOptions& options) {
  const int window = generator.plan().input_size;
  if (stft.n_freq() - 1 != window) {
    ThrowUsage("conceal.incompatible", "checkpoint STFT does not match the network size");
  }
  if (options.gla_iters < 0) ThrowUsage("gla.bad_iters", "iterations must be >= 0");
  const std::size_t need = FrameSpan(window, stft);
  if (lossy.size() < need) {
    ThrowUsage("conceal.too_short",
               "input has " + std::to_string(lossy.size()) + " samples; pad it to at least " +
                   std::to_string(need) + " samples (one network window)");
  }
  const Spectrogram spec = Stft(lossy, stft);
  const Eigen::MatrixXd mag = Magnitude(spec);
  const double peak = std::max(mag.maxCoeff(), kLogEps);
  const LogMagSpectrogram lm = LogMag(mag, peak);
  const int frames = spec.n_frames();
  const std::vector<int> starts = TileStarts(frames, window);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(mag.rows(), frames);
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(frames);
  NoGradGuard no_grad;
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, options.max_batch));
  for (std::size_t first = 0; first < starts.size(); first += chunk) {
    const std::size_t last = std::min(starts.size(), first + chunk);
    std::vector<Eigen::MatrixXd> tiles;
    for (std::size_t t = first; t < last; ++t) tiles.push_back(lm.values.middleCols(starts[t], window));
    std::vector<const Eigen::MatrixXd*> ptrs;
    for (const auto& t : tiles) ptrs.push_back(&t);
    const ForwardOptions opts{false, options.dropout,
                              DeriveSeed(options.dropout_seed, static_cast<uint64_t>(first))};
    const Tensor out = generator.Forward(Pack(ptrs), opts);
    for (std::size_t t = first; t < last; ++t) {
      const Eigen::MatrixXd m = Denorm({Unpack(out, static_cast<int>(t - first)), peak, true});
      sum.middleCols(starts[t], window) += m;
      hits.segment(starts[t], window).array() += 1.0;
    }
  }
  for (int f = 0; f < frames; ++f) sum.col(f) /= hits(f);

  AudioBuffer resynth = GriffinLim(sum, PhaseInit::Given(Phase(spec)), options.gla_iters,
                                   stft, lossy.size())
                            .audio;
  if (!options.splice) return resynth;
  return SpliceGaps(lossy, resynth, kSpliceRamp);
}

std::vector<std::pair<std::size_t, std::size_t>> FindGaps(const AudioBuffer& buf,
                                                          std::size_t min_len) {
  std::vector<std::pair<std::size_t, std::size_t>> gaps;
  std::size_t i = 0;
  const std::size_t n = buf.size();
  while (i < n) {
    if (buf.samples[i] != 0.0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && buf.samples[j] == 0.0) ++j;
    if (j - i >= min_len) gaps.emplace_back(i, j);
    i = j;
  }
  return gaps;
}

AudioBuffer SpliceGaps(const AudioBuffer& lossy, const AudioBuffer& resynth,
                       std::size_t ramp) {
  if (lossy.size() != resynth.size()) {
    ThrowUsage("splice.length_mismatch", "lossy and resynthesized lengths differ");
  }
  const std::size_t n = lossy.size();
  std::vector<double> weight(n, 0.0);
  for (const auto& [begin, end] : FindGaps(lossy, kMinGapSamples)) {
    for (std::size_t i = begin; i < end; ++i) weight[i] = 1.0;
    for (std::size_t k = 0; k < ramp; ++k) {
      const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(k + 1) /
                                            static_cast<double>(ramp + 1));
      if (begin >= ramp - k) {
        const std::size_t i = begin - ramp + k;
        weight[i] = std::max(weight[i], w);
      }
      const std::size_t i = end + ramp - 1 - k;
      if (i < n) weight[i] = std::max(weight[i], w);
    }
  }
  AudioBuffer out = lossy;
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = (1.0 - weight[i]) * lossy.samples[i] + weight[i] * resynth.samples[i];
  }
  return out;
}

}  // namespace b2b
