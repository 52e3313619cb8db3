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

#include "b2b/models.h"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "b2b/error.h"
#include "b2b/rng.h"

namespace b2b {
namespace {

constexpr Hw kUnetKernel{4, 4};
constexpr Hw kUnetStride{2, 2};
constexpr Hw kUnetPadding{1, 1};
constexpr double kInitStd = 0.02;

Tensor NormalTensor(const Shape& shape, double mean, SplitMix64& rng) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = rng.Normal(mean, kInitStd);
  return Tensor::FromVector(shape, std::move(v), true);
}

ConvLayer MakeConv(const Shape& weight_shape, int bias_len, SplitMix64& rng) {
  ConvLayer layer;
  layer.weight = NormalTensor(weight_shape, 0.0, rng);
  if (bias_len > 0) layer.bias = Tensor::Zeros({bias_len}, true);
  return layer;
}

NormLayer MakeNorm(int channels, SplitMix64& rng) {
  NormLayer layer{NormalTensor({channels}, 1.0, rng),
                  Tensor::Zeros({channels}, true), BatchNormStats(channels)};
  return layer;
}

ConvLayer CloneConv(const ConvLayer& c) {
  return {c.weight.Clone(), c.bias.defined() ? c.bias.Clone() : Tensor()};
}

std::optional<NormLayer> CloneNorm(const std::optional<NormLayer>& n) {
  if (!n) return std::nullopt;
  return NormLayer{n->gamma.Clone(), n->beta.Clone(), n->stats};
}

void AppendConv(std::vector<std::pair<std::string, Tensor>>& out,
                const std::string& prefix, const ConvLayer& c) {
  out.emplace_back(prefix + ".weight", c.weight);
  if (c.bias.defined()) out.emplace_back(prefix + ".bias", c.bias);
}

void AppendNorm(std::vector<std::pair<std::string, Tensor>>& out,
                const std::string& prefix, const std::optional<NormLayer>& n) {
  if (!n) return;
  out.emplace_back(prefix + ".bn.gamma", n->gamma);
  out.emplace_back(prefix + ".bn.beta", n->beta);
}

void CheckSquareInput(const char* what, const Tensor& x, int size) {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != size || x.dim(3) != size) {
    ThrowUsage("models.bad_input",
               std::string(what) + " expects [N, 1, " + std::to_string(size) +
                   ", " + std::to_string(size) + "], got " +
                   ShapeString(x.shape()));
  }
}

std::string JoinInts(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> SplitInts(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      ThrowData("checkpoint.bad_header", "bad integer list '" + text + "'");
    }
    out.push_back(v);
  }
  return out;
}

Hw ParseHw(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) ThrowData("checkpoint.bad_header", "bad size '" + text + "'");
  return {SplitInts(text.substr(0, x)).at(0), SplitInts(text.substr(x + 1)).at(0)};
}

// Parses "key=value key=value" after a leading tag word.
std::map<std::string, std::string> ParseFields(const std::string& line) {
  std::map<std::string, std::string> fields;
  std::stringstream in(line);
  std::string token;
  in >> token;  // tag
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

const std::string& Field(const std::map<std::string, std::string>& fields,
                         const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) {
    ThrowData("checkpoint.bad_header", "model header lacks '" + key + "'");
  }
  return it->second;
}

void StoreAdam(Checkpoint& ckpt, const std::string& prefix,
               const std::vector<std::pair<std::string, Tensor>>& params,
               const AdamState& adam) {
  if (adam.m.size() != params.size()) return;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ckpt.records.push_back({"adam." + prefix + ".m." + params[k].first,
                            params[k].second.shape(), adam.m[k]});
    ckpt.records.push_back({"adam." + prefix + ".v." + params[k].first,
                            params[k].second.shape(), adam.v[k]});
  }
}

void LoadParams(const Checkpoint& ckpt,
                const std::vector<std::pair<std::string, Tensor>>& params,
                const std::vector<std::pair<std::string, BatchNormStats*>>& stats) {
  for (const auto& [name, tensor] : params) {
    const TensorRecord* r = ckpt.Find(name);
    if (!r || r->shape != tensor.shape()) {
      ThrowData("checkpoint.incompatible",
                "missing or mis-shaped parameter '" + name + "'");
    }
    Tensor t = tensor;
    std::copy(r->values.begin(), r->values.end(), t.data().begin());
  }
  for (const auto& [name, s] : stats) {
    const TensorRecord* mean = ckpt.Find(name + ".running_mean");
    const TensorRecord* var = ckpt.Find(name + ".running_var");
    if (!mean || !var || mean->values.size() != s->running_mean.size() ||
        var->values.size() != s->running_var.size()) {
      ThrowData("checkpoint.incompatible", "missing statistics for '" + name + "'");
    }
    s->running_mean = mean->values;
    s->running_var = var->values;
  }
}

}  // namespace

Hw DiscriminatorPlan::OutputSize() const {
  Hw size{input_size, input_size};
  for (int l = 0; l < layers(); ++l) {
    const int s = strides[static_cast<std::size_t>(l)];
    size.h = ConvOutputSize(size.h, kernel.h, s, padding.h);
    size.w = ConvOutputSize(size.w, kernel.w, s, padding.w);
  }
  return size;
}

ModelConfig ModelConfig::Full() { return ModelConfig{}; }

ModelConfig ModelConfig::Reduced() {
  ModelConfig c;
  c.stft = {128, 64};
  c.generator.input_size = 64;
  c.generator.channels = {32, 64, 128, 256, 256, 256};
  c.discriminator.input_size = 64;
  return c;
}

// ---------------------------------------------------------------- Generator

Generator::Generator(const GeneratorPlan& plan, uint64_t seed) : plan_(plan) {
  const int stages = plan.stages();
  if (stages < 2 || (1 << stages) != plan.input_size) {
    ThrowUsage("models.bad_plan",
               "generator input size must equal 2^stages (stages >= 2)");
  }
  SplitMix64 rng(seed);
  const auto& ch = plan.channels;
  auto c = [&](int i) { return ch[static_cast<std::size_t>(i)]; };
  for (int i = 0; i < stages; ++i) {
    const int in = i == 0 ? 1 : c(i - 1);
    const bool norm = i > 0 && i < stages - 1;
    down_.push_back(MakeConv({c(i), in, kUnetKernel.h, kUnetKernel.w},
                             norm ? 0 : c(i), rng));
    down_norm_.push_back(norm ? std::optional(MakeNorm(c(i), rng)) : std::nullopt);
  }
  for (int k = 0; k < stages; ++k) {
    const int in = k == 0 ? c(stages - 1) : 2 * c(stages - 1 - k);
    const bool outermost = k == stages - 1;
    const int out = outermost ? 1 : c(stages - 2 - k);
    up_.push_back(MakeConv({in, out, kUnetKernel.h, kUnetKernel.w},
                           outermost ? out : 0, rng));
    up_norm_.push_back(outermost ? std::nullopt : std::optional(MakeNorm(out, rng)));
  }
}

Tensor Generator::Forward(const Tensor& x, const ForwardOptions& opts) {
  CheckSquareInput("generator", x, plan_.input_size);
  for (double v : x.data()) {
    if (!(v >= -1.0 && v <= 1.0)) {
      ThrowUsage("models.input_range", "generator input must lie in [-1, 1]");
    }
  }
  const int stages = plan_.stages();
  std::vector<Tensor> skips;
  Tensor h = x;
  for (int i = 0; i < stages; ++i) {
    if (i > 0) h = LeakyRelu(h, plan_.leaky_slope);
    const auto& conv = down_[static_cast<std::size_t>(i)];
    h = Conv2d(h, conv.weight, conv.bias, kUnetStride, kUnetPadding);
    if (auto& norm = down_norm_[static_cast<std::size_t>(i)]) {
      h = BatchNorm2d(h, norm->gamma, norm->beta, norm->stats, opts.training);
    }
    skips.push_back(h);
  }
  for (int k = 0; k < stages; ++k) {
    h = Relu(h);
    const auto& conv = up_[static_cast<std::size_t>(k)];
    h = ConvTranspose2d(h, conv.weight, conv.bias, kUnetStride, kUnetPadding);
    if (k == stages - 1) break;
    auto& norm = up_norm_[static_cast<std::size_t>(k)];
    h = BatchNorm2d(h, norm->gamma, norm->beta, norm->stats, opts.training);
    if (k < plan_.dropout_blocks) {
      h = Dropout(h, plan_.dropout_p,
                  DeriveSeed(opts.dropout_seed, static_cast<uint64_t>(k)),
                  opts.dropout);
    }
    h = ConcatChannels(h, skips[static_cast<std::size_t>(stages - 2 - k)]);
  }
  return Tanh(h);
}

std::vector<std::pair<std::string, Tensor>> Generator::NamedParameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < down_.size(); ++i) {
    const std::string p = "g.down" + std::to_string(i);
    AppendConv(out, p, down_[i]);
    AppendNorm(out, p, down_norm_[i]);
  }
  for (std::size_t k = 0; k < up_.size(); ++k) {
    const std::string p = "g.up" + std::to_string(k);
    AppendConv(out, p, up_[k]);
    AppendNorm(out, p, up_norm_[k]);
  }
  return out;
}

std::vector<std::pair<std::string, BatchNormStats*>> Generator::NamedStats() {
  std::vector<std::pair<std::string, BatchNormStats*>> out;
  for (std::size_t i = 0; i < down_norm_.size(); ++i) {
    if (down_norm_[i]) out.emplace_back("g.down" + std::to_string(i) + ".bn", &down_norm_[i]->stats);
  }
  for (std::size_t k = 0; k < up_norm_.size(); ++k) {
    if (up_norm_[k]) out.emplace_back("g.up" + std::to_string(k) + ".bn", &up_norm_[k]->stats);
  }
  return out;
}

std::vector<Tensor> Generator::Parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : NamedParameters()) out.push_back(t);
  return out;
}

std::size_t Generator::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& t : Parameters()) n += t.numel();
  return n;
}

Generator Generator::Clone() const {
  Generator g;
  g.plan_ = plan_;
  for (const auto& c : down_) g.down_.push_back(CloneConv(c));
  for (const auto& n : down_norm_) g.down_norm_.push_back(CloneNorm(n));
  for (const auto& c : up_) g.up_.push_back(CloneConv(c));
  for (const auto& n : up_norm_) g.up_norm_.push_back(CloneNorm(n));
  return g;
}

// ------------------------------------------------------------ Discriminator

Discriminator::Discriminator(const DiscriminatorPlan& plan, uint64_t seed)
    : plan_(plan) {
  const auto layers = static_cast<std::size_t>(plan.layers());
  if (layers == 0 || plan.strides.size() != layers ||
      plan.batch_norm.size() != layers) {
    ThrowUsage("models.bad_plan", "discriminator plan lists differ in length");
  }
  plan.OutputSize();  // validates the geometry
  SplitMix64 rng(seed);
  int in = 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const int out = plan.channels[l];
    const bool norm = plan.batch_norm[l];
    conv_.push_back(MakeConv({out, in, plan.kernel.h, plan.kernel.w}, norm ? 0 : out, rng));
    norm_.push_back(norm ? std::optional(MakeNorm(out, rng)) : std::nullopt);
    in = out;
  }
}

Tensor Discriminator::Forward(const Tensor& condition, const Tensor& candidate,
                              const ForwardOptions& opts) {
  CheckSquareInput("discriminator condition", condition, plan_.input_size);
  CheckSquareInput("discriminator candidate", candidate, plan_.input_size);
  if (condition.dim(0) != candidate.dim(0)) {
    ThrowUsage("models.bad_input", "discriminator inputs differ in batch size");
  }
  Tensor h = ConcatChannels(condition, candidate);
  const int layers = plan_.layers();
  for (int l = 0; l < layers; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    const int s = plan_.strides[idx];
    h = Conv2d(h, conv_[idx].weight, conv_[idx].bias, {s, s}, plan_.padding);
    if (auto& norm = norm_[idx]) {
      h = BatchNorm2d(h, norm->gamma, norm->beta, norm->stats, opts.training);
    }
    if (l < layers - 1) h = LeakyRelu(h, plan_.leaky_slope);
  }
  return h;
}

std::vector<std::pair<std::string, Tensor>> Discriminator::NamedParameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t l = 0; l < conv_.size(); ++l) {
    const std::string p = "d.conv" + std::to_string(l);
    AppendConv(out, p, conv_[l]);
    AppendNorm(out, p, norm_[l]);
  }
  return out;
}

std::vector<std::pair<std::string, BatchNormStats*>> Discriminator::NamedStats() {
  std::vector<std::pair<std::string, BatchNormStats*>> out;
  for (std::size_t l = 0; l < norm_.size(); ++l) {
    if (norm_[l]) out.emplace_back("d.conv" + std::to_string(l) + ".bn", &norm_[l]->stats);
  }
  return out;
}

std::vector<Tensor> Discriminator::Parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : NamedParameters()) out.push_back(t);
  return out;
}

std::size_t Discriminator::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& t : Parameters()) n += t.numel();
  return n;
}

Discriminator Discriminator::Clone() const {
  Discriminator d;
  d.plan_ = plan_;
  for (const auto& c : conv_) d.conv_.push_back(CloneConv(c));
  for (const auto& n : norm_) d.norm_.push_back(CloneNorm(n));
  return d;
}

void Discriminator::ZeroFinalLayer() {
  ConvLayer& last = conv_.back();
  std::fill(last.weight.data().begin(), last.weight.data().end(), 0.0);
  if (last.bias.defined()) std::fill(last.bias.data().begin(), last.bias.data().end(), 0.0);
}

// ---------------------------------------------------------- receptive field

Hw ReceptiveField(std::span<const Hw> kernels, std::span<const Hw> strides) {
  if (kernels.empty() || kernels.size() != strides.size()) {
    ThrowUsage("rf.bad_lists", "kernel and stride lists must be non-empty and equal length");
  }
  Hw r{1, 1};
  for (std::size_t i = kernels.size(); i-- > 0;) {
    r.h = strides[i].h * (r.h - 1) + kernels[i].h;
    r.w = strides[i].w * (r.w - 1) + kernels[i].w;
  }
  return r;
}

std::pair<int, int> ReceptiveSpan(std::span<const int> kernels,
                                  std::span<const int> strides,
                                  std::span<const int> pads, int out) {
  int lo = out, hi = out;
  for (std::size_t i = kernels.size(); i-- > 0;) {
    lo = lo * strides[i] - pads[i];
    hi = hi * strides[i] - pads[i] + kernels[i] - 1;
  }
  return {lo, hi};
}

// -------------------------------------------------------------- checkpoints

std::string DescribeModel(const ModelConfig& config) {
  const auto& g = config.generator;
  const auto& d = config.discriminator;
  std::ostringstream out;
  out << "b2b-model v1\n";
  out << "stft window=" << config.stft.window_len << " hop=" << config.stft.hop << '\n';
  out << "generator input=" << g.input_size << " channels=" << JoinInts(g.channels)
      << " kernel=4x4 stride=2 pad=1 dropout_blocks=" << g.dropout_blocks
      << " dropout_p=" << g.dropout_p << " slope=" << g.leaky_slope << '\n';
  std::vector<int> bn;
  for (bool b : d.batch_norm) bn.push_back(b ? 1 : 0);
  out << "discriminator input=" << d.input_size << " channels=" << JoinInts(d.channels)
      << " kernel=" << d.kernel.h << 'x' << d.kernel.w << " strides=" << JoinInts(d.strides)
      << " pad=" << d.padding.h << 'x' << d.padding.w << " bn=" << JoinInts(bn)
      << " slope=" << d.leaky_slope << '\n';
  return out.str();
}

ModelConfig ParseModelDescription(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "b2b-model v1") {
    ThrowData("checkpoint.bad_header", "unknown model header '" + line + "'");
  }
  ModelConfig config;
  bool have_stft = false, have_g = false, have_d = false;
  while (std::getline(in, line)) {
    const auto f = ParseFields(line);
    if (line.rfind("stft ", 0) == 0) {
      config.stft.window_len = SplitInts(Field(f, "window")).at(0);
      config.stft.hop = SplitInts(Field(f, "hop")).at(0);
      have_stft = true;
    } else if (line.rfind("generator ", 0) == 0) {
      auto& g = config.generator;
      g.input_size = SplitInts(Field(f, "input")).at(0);
      g.channels = SplitInts(Field(f, "channels"));
      g.dropout_blocks = SplitInts(Field(f, "dropout_blocks")).at(0);
      g.dropout_p = std::stod(Field(f, "dropout_p"));
      g.leaky_slope = std::stod(Field(f, "slope"));
      have_g = true;
    } else if (line.rfind("discriminator ", 0) == 0) {
      auto& d = config.discriminator;
      d.input_size = SplitInts(Field(f, "input")).at(0);
      d.channels = SplitInts(Field(f, "channels"));
      d.kernel = ParseHw(Field(f, "kernel"));
      d.strides = SplitInts(Field(f, "strides"));
      d.padding = ParseHw(Field(f, "pad"));
      d.batch_norm.clear();
      for (int b : SplitInts(Field(f, "bn"))) d.batch_norm.push_back(b != 0);
      d.leaky_slope = std::stod(Field(f, "slope"));
      have_d = true;
    }
  }
  if (!have_stft || !have_g || !have_d) {
    ThrowData("checkpoint.bad_header", "model header is incomplete");
  }
  return config;
}

Checkpoint ModelToCheckpoint(const ModelConfig& config, const Generator& g,
                             const Discriminator* d, const AdamState* g_adam,
                             const AdamState* d_adam) {
  Checkpoint ckpt;
  ckpt.header = DescribeModel(config);
  ckpt.header += std::string("contents generator=1 discriminator=") + (d ? "1" : "0") + '\n';
  if (g_adam || d_adam) {
    ckpt.header += "adam g_steps=" + std::to_string(g_adam ? g_adam->step_count : 0) +
                   " d_steps=" + std::to_string(d_adam ? d_adam->step_count : 0) + '\n';
  }
  auto add_all = [&ckpt](const auto& params, auto stats) {
    for (const auto& [name, t] : params) {
      ckpt.records.push_back({name, t.shape(), {t.data().begin(), t.data().end()}});
    }
    for (const auto& [name, s] : stats) {
      const int c = static_cast<int>(s->running_mean.size());
      ckpt.records.push_back({name + ".running_mean", {c}, s->running_mean});
      ckpt.records.push_back({name + ".running_var", {c}, s->running_var});
    }
  };
  // NamedStats() is non-const only because it hands out mutable pointers.
  add_all(g.NamedParameters(), const_cast<Generator&>(g).NamedStats());
  if (d) add_all(d->NamedParameters(), const_cast<Discriminator*>(d)->NamedStats());
  if (g_adam) StoreAdam(ckpt, "g", g.NamedParameters(), *g_adam);
  if (d && d_adam) StoreAdam(ckpt, "d", d->NamedParameters(), *d_adam);
  return ckpt;
}

LoadedModel ModelFromCheckpoint(const Checkpoint& ckpt) {
  const ModelConfig config = ParseModelDescription(ckpt.header);
  LoadedModel model{config, Generator(config.generator, 0), std::nullopt};
  LoadParams(ckpt, model.generator.NamedParameters(), model.generator.NamedStats());
  if (ckpt.header.find("discriminator=1") != std::string::npos) {
    model.discriminator.emplace(config.discriminator, 0);
    LoadParams(ckpt, model.discriminator->NamedParameters(),
               model.discriminator->NamedStats());
  }
  return model;
}

}  // namespace b2b
