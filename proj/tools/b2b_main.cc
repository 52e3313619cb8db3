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


// Command-line front end: one subcommand per pipeline stage.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "b2b/audio_io.h"
#include "b2b/checkpoint.h"
#include "b2b/error.h"
#include "b2b/loss_sim.h"
#include "b2b/metrics.h"
#include "b2b/models.h"
#include "b2b/rng.h"
#include "b2b/tf_transform.h"
#include "b2b/trainer.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

int ParseInt(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size()) b2b::ThrowUsage("usage.bad_value", "bad " + what + " '" + s + "'");
  return v;
}

double ParseDouble(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size()) b2b::ThrowUsage("usage.bad_value", "bad " + what + " '" + s + "'");
  return v;
}

// "8x2" -> {8, 2}; "3" -> {3, 3}.
b2b::Hw ParseHw(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) {
    const int v = ParseInt(s, "size");
    return {v, v};
  }
  return {ParseInt(s.substr(0, x), "size"), ParseInt(s.substr(x + 1), "size")};
}

// Percent list "10,20" -> {0.1, 0.2}.
std::vector<double> ParseRates(const std::string& text) {
  std::vector<double> rates;
  for (const auto& item : SplitList(text)) rates.push_back(ParseDouble(item, "rate") / 100.0);
  if (rates.empty()) b2b::ThrowUsage("usage.bad_value", "empty rate list");
  return rates;
}

std::vector<b2b::NamedClip> LoadManifest(const fs::path& manifest, bool trim) {
  std::vector<b2b::NamedClip> clips;
  for (const auto& path : b2b::ReadManifest(manifest)) {
    b2b::AudioBuffer audio = b2b::ReadWav(path);
    if (trim) audio = b2b::TrimSilence(audio);
    clips.push_back({path.stem().string(), std::move(audio)});
  }
  if (clips.empty()) b2b::ThrowData("manifest.empty", "no clips in " + manifest.string());
  return clips;
}

std::vector<b2b::AudioBuffer> Buffers(const std::vector<b2b::NamedClip>& clips) {
  std::vector<b2b::AudioBuffer> out;
  for (const auto& c : clips) out.push_back(c.audio);
  return out;
}

void PrintHeader(const CLI::App& sub) {
  std::cerr << "# b2b " << sub.get_name() << '\n';
  std::string line;
  std::istringstream config(sub.config_to_str(true, false));
  while (std::getline(config, line)) {
    if (!line.empty()) std::cerr << "#   " << line << '\n';
  }
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
  std::string out;
  int clips = 8;
  double duration = 3.0;
  double f0_min = 90.0;
  double f0_max = 250.0;
  uint64_t seed = 0;
};

void RunSynth(const SynthArgs& a) {
  if (a.clips < 1) b2b::ThrowUsage("usage.bad_value", "--clips must be >= 1");
  if (!(a.f0_min <= a.f0_max)) b2b::ThrowUsage("usage.bad_value", "--f0-min exceeds --f0-max");
  fs::create_directories(a.out);
  b2b::SplitMix64 rng(b2b::DeriveSeed(a.seed, 0xF0));
  std::vector<std::string> names;
  for (int i = 0; i < a.clips; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04d.wav", i);
    const double f0 = rng.Uniform(a.f0_min, a.f0_max);
    b2b::WriteWav(fs::path(a.out) / name,
                  b2b::SynthClip(a.duration, f0, b2b::DeriveSeed(a.seed, static_cast<uint64_t>(i))));
    names.emplace_back(name);
  }
  b2b::WriteManifest(fs::path(a.out) / "manifest.txt", names);
  std::cout << "wrote " << a.clips << " clips and " << (fs::path(a.out) / "manifest.txt").string()
            << '\n';
}

struct SimulateArgs {
  std::string in, out, trace;
  double rate = 0.2;
  uint64_t seed = 0;
};

void RunSimulate(const SimulateArgs& a) {
  if (!(a.rate > 0.0 && a.rate < 1.0)) {
    b2b::ThrowUsage("trace.bad_rate", "rate must lie in (0, 1)");
  }
  const b2b::AudioBuffer clean = b2b::ReadWav(a.in);
  const b2b::LossTrace trace = b2b::GenerateTrace(b2b::PacketsFor(clean.size()), a.rate, a.seed);
  if (!a.trace.empty()) b2b::WriteTrace(a.trace, trace);
  b2b::WriteWav(a.out, b2b::ApplyTrace(clean, trace));
  const b2b::GapHistogram h = b2b::TraceStats(trace);
  std::cout << "packets " << trace.lost.size() << " realized_rate " << h.realized_rate << '\n';
}

struct TrainArgs {
  std::string manifest, val_manifest, out, log_prefix;
  bool reduced = false;
  bool trim = false;
  int epochs = 50;
  int batch = 8;
  double lr = 2e-4;
  int n_g = 10;
  int patience = 5;
  int cycles = 0;
  double lambda_mag = 250.0;
  double lambda_sc = 250.0;
  std::string rates = "10,20,30,40";
  std::string condition = "lossy";
  std::string crop = "random";
  std::string split = "0.8,0.1,0.1";
  uint64_t seed = 0;
};

void RunTrain(const TrainArgs& a) {
  b2b::TrainConfig cfg;
  cfg.model = a.reduced ? b2b::ModelConfig::Reduced() : b2b::ModelConfig::Full();
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.n_g = a.n_g;
  cfg.patience = a.patience;
  cfg.cycles_per_epoch = a.cycles;
  cfg.weights = {a.lambda_mag, a.lambda_sc};
  cfg.rates = ParseRates(a.rates);
  cfg.conditioning = a.condition == "clean" ? b2b::Conditioning::kClean : b2b::Conditioning::kLossy;
  cfg.crop = a.crop == "tiled"   ? b2b::CropPolicy::kTiled
             : a.crop == "fixed" ? b2b::CropPolicy::kFixed
                                 : b2b::CropPolicy::kRandom;
  cfg.seed = a.seed;

  const auto clips = LoadManifest(a.manifest, a.trim);
  std::vector<b2b::AudioBuffer> train, validation;
  if (!a.val_manifest.empty()) {
    train = Buffers(clips);
    validation = Buffers(LoadManifest(a.val_manifest, a.trim));
  } else {
    const auto parts = SplitList(a.split);
    if (parts.size() != 3) b2b::ThrowUsage("usage.bad_value", "--split needs three ratios");
    std::vector<std::string> ids;
    for (const auto& c : clips) ids.push_back(c.id);
    const b2b::CorpusSplit split = b2b::SplitCorpus(
        ids, {ParseDouble(parts[0], "ratio"), ParseDouble(parts[1], "ratio"),
              ParseDouble(parts[2], "ratio")},
        a.seed);
    auto pick = [&](const std::vector<std::string>& names) {
      std::vector<b2b::AudioBuffer> out;
      for (const auto& n : names) {
        for (const auto& c : clips) {
          if (c.id == n) out.push_back(c.audio);
        }
      }
      return out;
    };
    train = pick(split.train);
    validation = pick(split.validation);
  }

  b2b::TrainResult result = b2b::Train(cfg, train, validation, &std::cerr);
  const fs::path out(a.out);
  const fs::path prefix = a.log_prefix.empty() ? out : fs::path(a.log_prefix);
  b2b::SaveCheckpoint(out, b2b::ModelToCheckpoint(cfg.model, result.best_generator));
  fs::copy_file(out, fs::path(out.string() + ".best"), fs::copy_options::overwrite_existing);
  b2b::SaveCheckpoint(fs::path(out.string() + ".last"),
                      b2b::ModelToCheckpoint(cfg.model, result.generator, &result.discriminator,
                                             &result.g_adam, &result.d_adam));
  result.log.WriteStepsCsv(prefix.string() + ".steps.csv");
  result.log.WriteEpochsCsv(prefix.string() + ".epochs.csv");
  std::cout << "best epoch " << result.best_epoch << " validation " << result.best_validation
            << " generator parameters " << result.best_generator.ParameterCount() << '\n';
}

struct ConcealArgs {
  std::string ckpt, in, out;
  bool splice = false;
  bool no_dropout = false;
  int gla_iters = 10;
  uint64_t seed = 0;
};

void RunConceal(const ConcealArgs& a) {
  b2b::LoadedModel model = b2b::ModelFromCheckpoint(b2b::LoadCheckpoint(a.ckpt));
  const b2b::AudioBuffer lossy = b2b::ReadWav(a.in);
  b2b::ConcealOptions opts;
  opts.gla_iters = a.gla_iters;
  opts.splice = a.splice;
  opts.dropout = !a.no_dropout;
  opts.dropout_seed = a.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const b2b::AudioBuffer out = b2b::Conceal(model.generator, model.config.stft, lossy, opts);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  b2b::WriteWav(a.out, out);
  std::cout << "throughput " << lossy.duration_s() / std::max(elapsed, 1e-9)
            << " seconds of audio per second (" << lossy.duration_s() << " s in " << elapsed
            << " s)\n";
}

struct EvaluateArgs {
  std::string ckpt = "zero-fill";
  std::string manifest, report, aggregate;
  std::string rates = "10,20,30,40";
  bool no_dropout = false;
  int gla_iters = 10;
  int jobs = 1;
  uint64_t seed = 0;
};

void RunEvaluate(const EvaluateArgs& a) {
  if (a.jobs < 1) b2b::ThrowUsage("usage.bad_value", "--jobs must be >= 1");
  const auto clips = LoadManifest(a.manifest, false);
  b2b::EvaluateOptions opts;
  opts.rates = ParseRates(a.rates);
  opts.seed = a.seed;
  opts.jobs = a.jobs;
  opts.conceal.gla_iters = a.gla_iters;
  opts.conceal.dropout = !a.no_dropout;
  std::optional<b2b::LoadedModel> model;
  b2b::StftParams stft;
  if (a.ckpt != "zero-fill") {
    model.emplace(b2b::ModelFromCheckpoint(b2b::LoadCheckpoint(a.ckpt)));
    stft = model->config.stft;
  }
  const b2b::MetricsReport report =
      b2b::EvaluateCorpus(model ? &model->generator : nullptr, stft, clips, opts);
  const std::string aggregate =
      a.aggregate.empty() ? fs::path(a.report).replace_extension(".aggregate.csv").string()
                          : a.aggregate;
  report.Write(a.report, aggregate);
  std::cout << report.AggregatesCsv();
}

struct DumpArgs {
  std::string in, out;
  int window = 512;
  int hop = 64;
};

void RunDump(const DumpArgs& a) {
  const b2b::LogMagSpectrogram lm = b2b::LogMag(b2b::Stft(b2b::ReadWav(a.in), {a.window, a.hop}));
  const std::string ext = fs::path(a.out).extension().string();
  if (ext == ".pgm") {
    b2b::WriteSpectrogramPgm(a.out, lm);
  } else if (ext == ".csv") {
    b2b::WriteSpectrogramCsv(a.out, lm);
  } else {
    b2b::ThrowUsage("usage.bad_value", "--out must end in .pgm or .csv");
  }
  std::cout << lm.n_rows() << " rows x " << lm.n_frames() << " frames\n";
}

struct RfArgs {
  std::string kernels = "8x2";
  std::string strides = "2,2,2,1,1";
};

void RunRf(const RfArgs& a) {
  std::vector<b2b::Hw> kernels, strides;
  for (const auto& s : SplitList(a.strides)) strides.push_back(ParseHw(s));
  for (const auto& k : SplitList(a.kernels)) kernels.push_back(ParseHw(k));
  if (kernels.size() == 1 && strides.size() > 1) kernels.resize(strides.size(), kernels[0]);
  const b2b::Hw rf = b2b::ReceptiveField(kernels, strides);
  std::cout << rf.h << 'x' << rf.w << '\n';
}

int ExitCodeFor(b2b::ErrorKind kind) {
  switch (kind) {
    case b2b::ErrorKind::kUsage: return kExitUsage;
    case b2b::ErrorKind::kData: return kExitData;
    case b2b::ErrorKind::kNumeric: return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bin2bin packet-loss concealment toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-corpus", "Write a synthetic speech-like corpus and manifest");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--clips", synth.clips, "Number of clips");
  s->add_option("--duration", synth.duration, "Clip duration in seconds");
  s->add_option("--f0-min", synth.f0_min, "Lowest fundamental in Hz");
  s->add_option("--f0-max", synth.f0_max, "Highest fundamental in Hz");
  s->add_option("--seed", synth.seed, "Corpus seed")->envname("B2B_SEED");

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Zero packets of a WAV file by a random loss trace");
  m->add_option("--in", sim.in, "Clean WAV")->required();
  m->add_option("--out", sim.out, "Zero-filled WAV")->required();
  m->add_option("--trace", sim.trace, "Trace file to write");
  m->add_option("--rate", sim.rate, "Packet loss rate in (0, 1)");
  m->add_option("--seed", sim.seed, "Trace seed")->envname("B2B_SEED");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train generator and discriminator");
  t->add_option("--manifest", train.manifest, "Training manifest")->required();
  t->add_option("--val-manifest", train.val_manifest,
                "Validation manifest; when empty the training manifest is split");
  t->add_option("--split", train.split, "Train,validation,test ratios");
  t->add_option("--out", train.out, "Checkpoint path (best); .best and .last are written too")
      ->required();
  t->add_option("--log-prefix", train.log_prefix, "Prefix of the step and epoch CSV logs");
  t->add_flag("--reduced", train.reduced, "Use the 64x64 reduced model");
  t->add_flag("--trim-silence", train.trim, "Trim leading/trailing audio below -40 dBFS");
  t->add_option("--epochs", train.epochs, "Maximum epochs");
  t->add_option("--batch", train.batch, "Batch size");
  t->add_option("--lr", train.lr, "Adam learning rate");
  t->add_option("--n-g", train.n_g, "Generator updates per discriminator update");
  t->add_option("--patience", train.patience, "Early-stopping patience in epochs");
  t->add_option("--cycles", train.cycles, "Discriminator updates per epoch (0 = one pass)");
  t->add_option("--lambda-mag", train.lambda_mag, "Weight of the log-magnitude loss");
  t->add_option("--lambda-sc", train.lambda_sc, "Weight of the spectral-convergence loss");
  t->add_option("--rates", train.rates, "Loss rates in percent");
  t->add_option("--condition", train.condition, "Discriminator condition")
      ->check(CLI::IsMember({"lossy", "clean"}));
  t->add_option("--crop", train.crop, "Crop policy")->check(CLI::IsMember({"random", "tiled", "fixed"}));
  t->add_option("--seed", train.seed, "Training seed")->envname("B2B_SEED");

  ConcealArgs conceal;
  auto* c = app.add_subcommand("conceal", "Conceal packet losses in a WAV file");
  c->add_option("--ckpt", conceal.ckpt, "Generator checkpoint")->required();
  c->add_option("--in", conceal.in, "Lossy WAV")->required();
  c->add_option("--out", conceal.out, "Concealed WAV")->required();
  c->add_flag("--splice", conceal.splice, "Replace only the zeroed gaps");
  c->add_flag("--no-dropout", conceal.no_dropout, "Disable generator dropout");
  c->add_option("--gla-iters", conceal.gla_iters, "Griffin-Lim iterations");
  c->add_option("--seed", conceal.seed, "Dropout seed")->envname("B2B_SEED");

  EvaluateArgs eval;
  auto* e = app.add_subcommand("evaluate", "Score zero-fill and concealment on a corpus");
  e->add_option("--ckpt", eval.ckpt, "Generator checkpoint, or zero-fill");
  e->add_option("--manifest", eval.manifest, "Clip manifest")->required();
  e->add_option("--report", eval.report, "Per-clip CSV report")->required();
  e->add_option("--aggregate", eval.aggregate, "Aggregate CSV (default: <report>.aggregate.csv)");
  e->add_option("--rates", eval.rates, "Loss rates in percent");
  e->add_flag("--no-dropout", eval.no_dropout, "Disable generator dropout");
  e->add_option("--gla-iters", eval.gla_iters, "Griffin-Lim iterations");
  e->add_option("--jobs", eval.jobs, "Worker threads");
  e->add_option("--seed", eval.seed, "Evaluation seed")->envname("B2B_SEED");

  DumpArgs dump;
  auto* d = app.add_subcommand("dump-spec", "Dump a normalized log-magnitude spectrogram");
  d->add_option("--in", dump.in, "WAV file")->required();
  d->add_option("--out", dump.out, "Output .pgm or .csv")->required();
  d->add_option("--window", dump.window, "STFT window length");
  d->add_option("--hop", dump.hop, "STFT hop");

  RfArgs rf;
  auto* r = app.add_subcommand("rf", "Receptive field of a convolution stack");
  r->add_option("--kernels", rf.kernels, "Kernels HxW, one per layer or one for all");
  r->add_option("--strides", rf.strides, "Strides per layer, S or HxW");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << "error: usage.bad_arguments: " << ex.what() << '\n';
    return kExitUsage;
  }

  try {
    for (const CLI::App* sub : app.get_subcommands()) PrintHeader(*sub);
    if (*s) RunSynth(synth);
    if (*m) RunSimulate(sim);
    if (*t) RunTrain(train);
    if (*c) RunConceal(conceal);
    if (*e) RunEvaluate(eval);
    if (*d) RunDump(dump);
    if (*r) RunRf(rf);
  } catch (const b2b::Error& ex) {
    std::cerr << "error: " << ex.code() << ": " << ex.what() << '\n';
    return ExitCodeFor(ex.kind());
  } catch (const std::exception& ex) {
    std::cerr << "error: io.failure: " << ex.what() << '\n';
    return kExitData;
  }
  return 0;
}
