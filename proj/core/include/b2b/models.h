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

#ifndef B2B_MODELS_H_
#define B2B_MODELS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "b2b/adam.h"
#include "b2b/checkpoint.h"
#include "b2b/ops.h"
#include "b2b/tensor.h"
#include "b2b/tf_transform.h"

namespace b2b {

// U-Net generator: a ladder of 4x4 stride-2 convolutions down to 1x1 and a
// mirrored transposed-convolution decoder with skip concatenation.
struct GeneratorPlan {
  int input_size = 256;
  std::vector<int> channels = {64, 128, 256, 512, 512, 512, 512, 512};
  int dropout_blocks = 3;  // leading decoder blocks followed by dropout
  double dropout_p = 0.5;
  double leaky_slope = 0.2;

  int stages() const { return static_cast<int>(channels.size()); }
  bool operator==(const GeneratorPlan&) const = default;
};

// PatchGAN discriminator with rectangular (frequency x time) kernels.
struct DiscriminatorPlan {
  int input_size = 256;
  std::vector<int> channels = {64, 128, 256, 512, 1};
  Hw kernel = {8, 2};
  std::vector<int> strides = {2, 2, 2, 1, 1};
  Hw padding = {3, 0};
  std::vector<bool> batch_norm = {false, true, true, true, false};
  double leaky_slope = 0.2;

  int layers() const { return static_cast<int>(channels.size()); }
  // Side of the (square) logits map for a square input.
  Hw OutputSize() const;
  bool operator==(const DiscriminatorPlan&) const = default;
};

// Everything needed to rebuild a model: the analysis geometry the network
// was trained on and both plans.
struct ModelConfig {
  StftParams stft;
  GeneratorPlan generator;
  DiscriminatorPlan discriminator;

  // 256x256 input, 8+8 stage U-Net, 512/64 STFT.
  static ModelConfig Full();
  // 64x64 input, 6+6 stage U-Net with ladder [32,64,128,256,256,256]; the
  // STFT is shortened so that it yields 64 network rows.
  static ModelConfig Reduced();

  int rows() const { return generator.input_size; }
  int frames() const { return generator.input_size; }
  bool operator==(const ModelConfig&) const = default;
};

struct ForwardOptions {
  bool training = true;      // batch statistics vs running statistics
  bool dropout = true;       // generator dropout is on at inference too
  uint64_t dropout_seed = 0;
};

struct ConvLayer {
  Tensor weight;
  Tensor bias;  // undefined when followed by batch norm
};

struct NormLayer {
  Tensor gamma;
  Tensor beta;
  BatchNormStats stats;
};

class Generator {
 public:
  Generator(const GeneratorPlan& plan, uint64_t seed);
  Generator(Generator&&) = default;
  Generator& operator=(Generator&&) = default;

  // x: [N, 1, S, S] with values in [-1, 1]; returns [N, 1, S, S] in (-1, 1).
  Tensor Forward(const Tensor& x, const ForwardOptions& opts);

  std::vector<std::pair<std::string, Tensor>> NamedParameters() const;
  std::vector<std::pair<std::string, BatchNormStats*>> NamedStats();
  std::vector<Tensor> Parameters() const;
  std::size_t ParameterCount() const;
  // Deep copy of parameters and running statistics.
  Generator Clone() const;

  const GeneratorPlan& plan() const { return plan_; }

 private:
  Generator() = default;

  GeneratorPlan plan_;
  std::vector<ConvLayer> down_;
  std::vector<std::optional<NormLayer>> down_norm_;
  std::vector<ConvLayer> up_;
  std::vector<std::optional<NormLayer>> up_norm_;
};

class Discriminator {
 public:
  Discriminator(const DiscriminatorPlan& plan, uint64_t seed);
  Discriminator(Discriminator&&) = default;
  Discriminator& operator=(Discriminator&&) = default;

  // Inputs [N, 1, S, S] each; returns patch logits [N, 1, P, P].
  Tensor Forward(const Tensor& condition, const Tensor& candidate,
                 const ForwardOptions& opts);

  std::vector<std::pair<std::string, Tensor>> NamedParameters() const;
  std::vector<std::pair<std::string, BatchNormStats*>> NamedStats();
  std::vector<Tensor> Parameters() const;
  std::size_t ParameterCount() const;
  Discriminator Clone() const;

  // Sets the last layer's weights and bias to zero (logits become 0).
  void ZeroFinalLayer();

  const DiscriminatorPlan& plan() const { return plan_; }

 private:
  Discriminator() = default;

  DiscriminatorPlan plan_;
  std::vector<ConvLayer> conv_;
  std::vector<std::optional<NormLayer>> norm_;
};

// Receptive field of one output unit, by the backward recurrence
// r_in = s * (r_out - 1) + k from r = 1 at the last layer.
Hw ReceptiveField(std::span<const Hw> kernels, std::span<const Hw> strides);

// Input rows [first, last] (inclusive, may fall outside the image) that
// influence output position `out` along one axis.
std::pair<int, int> ReceptiveSpan(std::span<const int> kernels,
                                  std::span<const int> strides,
                                  std::span<const int> pads, int out);

// Self-describing checkpoint. Optimizer state is stored when given.
Checkpoint ModelToCheckpoint(const ModelConfig& config, const Generator& g,
                             const Discriminator* d = nullptr,
                             const AdamState* g_adam = nullptr,
                             const AdamState* d_adam = nullptr);

struct LoadedModel {
  ModelConfig config;
  Generator generator;
  std::optional<Discriminator> discriminator;
};

LoadedModel ModelFromCheckpoint(const Checkpoint& ckpt);

// Text form of the plans stored in the checkpoint header.
std::string DescribeModel(const ModelConfig& config);
ModelConfig ParseModelDescription(const std::string& text);

}  // namespace b2b

#endif  // B2B_MODELS_H_
