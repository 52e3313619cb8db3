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

#ifndef B2B_TENSOR_H_
#define B2B_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace b2b {

using Shape = std::vector<int>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

struct TensorData;
using BackwardFn = std::function<void(TensorData& self)>;

// Storage plus the backward-graph record of one tensor. A tensor with a
// `backward` function is an interior node; one without is a leaf. Leaves
// with requires_grad accumulate gradients across Backward() calls.
struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is first produced
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<TensorData>> parents;
  BackwardFn backward;

  // Gradient buffer sized to the value, allocated on first use.
  std::vector<double>& GradBuffer();
};

// Shared handle to TensorData. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorData> impl) : impl_(std::move(impl)) {}

  static Tensor Zeros(const Shape& shape, bool requires_grad = false);
  static Tensor Full(const Shape& shape, double value,
                     bool requires_grad = false);
  static Tensor FromVector(const Shape& shape, std::vector<double> values,
                           bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return impl_->value.size(); }

  std::span<double> data() { return impl_->value; }
  std::span<const double> data() const { return impl_->value; }
  double& at(std::size_t i) { return impl_->value[i]; }
  double at(std::size_t i) const { return impl_->value[i]; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() { return impl_->GradBuffer(); }
  void ZeroGrad();

  const std::string& op() const { return impl_->op; }
  bool is_leaf() const { return !impl_->backward; }

  // New leaf holding a copy of the values, cut from the graph.
  Tensor Detach() const;
  // Deep copy including requires_grad, but not gradients or graph.
  Tensor Clone() const;

  // Reverse-mode sweep from this scalar. Interior gradients are recomputed
  // on each call; leaf gradients accumulate until ZeroGrad().
  void Backward() const;

  TensorData* get() const { return impl_.get(); }
  const std::shared_ptr<TensorData>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorData> impl_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

// Builds an op result. When grad mode is on and any parent requires a
// gradient, the result records `backward` and its parents.
Tensor MakeResult(Shape shape, std::vector<double> value, std::string op,
                  std::vector<Tensor> parents, BackwardFn backward);

}  // namespace b2b

#endif  // B2B_TENSOR_H_
