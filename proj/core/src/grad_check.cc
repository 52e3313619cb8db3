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

#include "b2b/grad_check.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "b2b/error.h"
#include "b2b/ops.h"
#include "b2b/rng.h"

namespace b2b {
namespace {

constexpr Hw kCheckStride{2, 1};
constexpr Hw kCheckPadding{1, 0};

double WeightedSum(const Tensor& out, const std::vector<double>& weights) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * out.data()[i];
  return acc;
}

// Values with magnitude in [0.1, 1] and random sign.
Tensor AwayFromZero(const Shape& shape, SplitMix64& rng) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = (rng.Uniform() < 0.5 ? -1.0 : 1.0) * rng.Uniform(0.1, 1.0);
  return Tensor::FromVector(shape, std::move(v), true);
}

Tensor Positive(const Shape& shape, SplitMix64& rng) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = rng.Uniform(0.2, 2.0);
  return Tensor::FromVector(shape, std::move(v), true);
}

struct OpSpec {
  std::size_t arity;
  std::function<std::vector<Tensor>(const std::vector<Shape>&, SplitMix64&)> make;
  TensorFn fn;
};

std::vector<Tensor> AllAwayFromZero(const std::vector<Shape>& shapes,
                                    SplitMix64& rng) {
  std::vector<Tensor> out;
  for (const auto& s : shapes) out.push_back(AwayFromZero(s, rng));
  return out;
}

std::vector<Tensor> AllPositive(const std::vector<Shape>& shapes,
                                SplitMix64& rng) {
  std::vector<Tensor> out;
  for (const auto& s : shapes) out.push_back(Positive(s, rng));
  return out;
}

const std::map<std::string, OpSpec>& Registry() {
  static const auto* registry = [] {
    auto* r = new std::map<std::string, OpSpec>();
    auto unary = [r](const std::string& name, TensorFn fn, bool positive = false) {
      (*r)[name] = {1, positive ? AllPositive : AllAwayFromZero, std::move(fn)};
    };
    auto binary = [r](const std::string& name, TensorFn fn, bool positive = false) {
      (*r)[name] = {2, positive ? AllPositive : AllAwayFromZero, std::move(fn)};
    };

    (*r)["conv2d"] = {3, AllAwayFromZero, [](const std::vector<Tensor>& in) {
                        return Conv2d(in[0], in[1], in[2], kCheckStride, kCheckPadding);
                      }};
    (*r)["conv_transpose2d"] = {3, AllAwayFromZero, [](const std::vector<Tensor>& in) {
                                  return ConvTranspose2d(in[0], in[1], in[2], kCheckStride,
                                                         kCheckPadding);
                                }};
    // Each closure owns its running statistics; they are only read in eval
    // mode, so repeated forwards stay consistent.
    for (bool training : {true, false}) {
      auto stats = std::make_shared<BatchNormStats>();
      auto make = [stats](const std::vector<Shape>& shapes, SplitMix64& rng) {
        auto in = AllAwayFromZero(shapes, rng);
        const int c = shapes[0].size() > 1 ? shapes[0][1] : 0;
        *stats = BatchNormStats(c);
        for (int k = 0; k < c; ++k) {
          stats->running_mean[static_cast<std::size_t>(k)] = rng.Uniform(-0.5, 0.5);
          stats->running_var[static_cast<std::size_t>(k)] = rng.Uniform(0.5, 2.0);
        }
        return in;
      };
      (*r)[training ? "batch_norm2d_train" : "batch_norm2d_eval"] = {
          3, make, [stats, training](const std::vector<Tensor>& in) {
            BatchNormStats scratch = *stats;
            return BatchNorm2d(in[0], in[1], in[2], scratch, training);
          }};
    }
    unary("leaky_relu", [](const std::vector<Tensor>& in) { return LeakyRelu(in[0], 0.2); });
    unary("relu", [](const std::vector<Tensor>& in) { return Relu(in[0]); });
    unary("tanh", [](const std::vector<Tensor>& in) { return Tanh(in[0]); });
    unary("sigmoid", [](const std::vector<Tensor>& in) { return Sigmoid(in[0]); });
    unary("dropout", [](const std::vector<Tensor>& in) { return Dropout(in[0], 0.5, 1234, true); });
    unary("exp", [](const std::vector<Tensor>& in) { return Exp(in[0]); });
    unary("log", [](const std::vector<Tensor>& in) { return Log(in[0]); }, true);
    unary("abs", [](const std::vector<Tensor>& in) { return Abs(in[0]); });
    unary("sqrt", [](const std::vector<Tensor>& in) { return Sqrt(in[0]); }, true);
    unary("square", [](const std::vector<Tensor>& in) { return Square(in[0]); });
    unary("scale", [](const std::vector<Tensor>& in) { return Scale(in[0], -1.7); });
    unary("add_scalar", [](const std::vector<Tensor>& in) { return AddScalar(in[0], 0.3); });
    unary("sum", [](const std::vector<Tensor>& in) { return Sum(in[0]); });
    unary("mean", [](const std::vector<Tensor>& in) { return Mean(in[0]); });
    binary("concat_channels", [](const std::vector<Tensor>& in) { return ConcatChannels(in[0], in[1]); });
    binary("add", [](const std::vector<Tensor>& in) { return Add(in[0], in[1]); });
    binary("sub", [](const std::vector<Tensor>& in) { return Sub(in[0], in[1]); });
    binary("mul", [](const std::vector<Tensor>& in) { return Mul(in[0], in[1]); });
    binary("div", [](const std::vector<Tensor>& in) { return Div(in[0], in[1]); }, true);

    (*r)["bce_with_logits"] = {
        2,
        [](const std::vector<Shape>& shapes, SplitMix64& rng) {
          std::vector<Tensor> in{AwayFromZero(shapes[0], rng)};
          std::vector<double> t(NumElements(shapes[1]));
          for (double& v : t) v = rng.Uniform();
          in.push_back(Tensor::FromVector(shapes[1], std::move(t), true));
          for (double& v : in[0].data()) v *= 3.0;
          return in;
        },
        [](const std::vector<Tensor>& in) { return BceWithLogits(in[0], in[1]); }};
    (*r)["l1_mean"] = {
        2,
        [](const std::vector<Shape>& shapes, SplitMix64& rng) {
          std::vector<Tensor> in{AwayFromZero(shapes[0], rng)};
          Tensor y = AwayFromZero(shapes[1], rng);
          for (std::size_t i = 0; i < y.numel(); ++i) y.at(i) += in[0].at(i);
          in.push_back(y);
          return in;
        },
        [](const std::vector<Tensor>& in) { return L1Mean(in[0], in[1]); }};
    return r;
  }();
  return *registry;
}

}  // namespace

GradCheckReport GradCheck(const std::string& name, const TensorFn& fn,
                          const std::vector<Tensor>& inputs, double tolerance,
                          double h, uint64_t seed, std::size_t max_probes) {
  GradCheckReport report;
  report.op = name;
  SplitMix64 rng(seed);

  for (auto t : inputs) {
    if (t.requires_grad()) t.mutable_grad();
  }
  for (auto t : inputs) t.ZeroGrad();
  Tensor out = fn(inputs);
  std::vector<double> weights(out.numel());
  for (double& w : weights) w = rng.Normal();
  const Tensor loss = Sum(Mul(out, Tensor::FromVector(out.shape(), weights)));
  loss.Backward();

  for (auto input : inputs) {
    if (!input.requires_grad()) continue;
    const std::vector<double> analytic(input.grad().begin(), input.grad().end());
    std::vector<std::size_t> probes(input.numel());
    for (std::size_t i = 0; i < probes.size(); ++i) probes[i] = i;
    if (max_probes > 0 && probes.size() > max_probes) {
      for (std::size_t i = probes.size(); i > 1; --i) {
        std::swap(probes[i - 1], probes[rng.Below(i)]);
      }
      probes.resize(max_probes);
    }
    NoGradGuard no_grad;
    for (std::size_t i : probes) {
      const double saved = input.at(i);
      input.at(i) = saved + h;
      const double plus = WeightedSum(fn(inputs), weights);
      input.at(i) = saved - h;
      const double minus = WeightedSum(fn(inputs), weights);
      input.at(i) = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      report.max_rel_error = std::max(report.max_rel_error, abs_err / denom);
      ++report.probes;
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

GradCheckReport GradCheckOp(const std::string& op,
                            const std::vector<Shape>& shapes, double tolerance,
                            uint64_t seed) {
  const auto& registry = Registry();
  const auto it = registry.find(op);
  if (it == registry.end()) {
    ThrowUsage("gradcheck.unknown_op", "no gradient check for op '" + op + "'");
  }
  if (shapes.size() != it->second.arity) {
    ThrowUsage("gradcheck.arity", op + " takes " +
                                      std::to_string(it->second.arity) +
                                      " input shapes");
  }
  SplitMix64 rng(DeriveSeed(seed, 0x6C));
  const std::vector<Tensor> inputs = it->second.make(shapes, rng);
  return GradCheck(op, it->second.fn, inputs, tolerance, 1e-4, seed);
}

std::vector<std::string> GradCheckOpNames() {
  std::vector<std::string> names;
  for (const auto& [name, spec] : Registry()) names.push_back(name);
  return names;
}

}  // namespace b2b
