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


#include <benchmark/benchmark.h>

#include "b2b/audio_io.h"
#include "b2b/loss_sim.h"
#include "b2b/models.h"
#include "b2b/ops.h"
#include "b2b/rng.h"
#include "b2b/tf_transform.h"

namespace b2b {
namespace {

Tensor Random(const Shape& shape, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = rng.Uniform(-1.0, 1.0);
  return Tensor::FromVector(shape, std::move(v));
}

void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const Tensor x = Random({1, c, 64, 64}, 1), w = Random({2 * c, c, 4, 4}, 2);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(Conv2d(x, w, Tensor(), {2, 2}, {1, 1}));
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
  const Tensor x = Random({1, 32, 64, 64}, 1);
  Tensor w = Random({64, 32, 4, 4}, 2);
  w.set_requires_grad(true);
  for (auto _ : state) {
    Sum(Conv2d(x, w, Tensor(), {2, 2}, {1, 1})).Backward();
    w.ZeroGrad();
  }
}
BENCHMARK(BM_Conv2dBackward);

void BM_Stft(benchmark::State& state) {
  const AudioBuffer clip = SynthClip(3.0, 140.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Stft(clip));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(clip.size()));
}
BENCHMARK(BM_Stft);

void BM_GriffinLim10(benchmark::State& state) {
  const AudioBuffer clip = SynthClip(3.0, 140.0, 1);
  const AudioBuffer lossy = ApplyTrace(clip, GenerateTrace(PacketsFor(clip.size()), 0.3, 2));
  const Eigen::MatrixXd mag = Magnitude(Stft(clip));
  const Eigen::MatrixXd phase = Phase(Stft(lossy));
  for (auto _ : state) {
    benchmark::DoNotOptimize(GriffinLim(mag, PhaseInit::Given(phase), 10, {}, clip.size()));
  }
}
BENCHMARK(BM_GriffinLim10)->Unit(benchmark::kMillisecond);

void BM_GeneratorForward(benchmark::State& state) {
  const bool full = state.range(0) != 0;
  const ModelConfig config = full ? ModelConfig::Full() : ModelConfig::Reduced();
  Generator g(config.generator, 1);
  const int s = config.generator.input_size;
  const Tensor x = Random({1, 1, s, s}, 3);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(g.Forward(x, {false, true, 4}));
}
BENCHMARK(BM_GeneratorForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace b2b

BENCHMARK_MAIN();
