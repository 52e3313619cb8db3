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

#include "b2b/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "b2b/error.h"

namespace b2b {
namespace {

thread_local bool grad_enabled = true;

}  // namespace

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::vector<double>& TensorData::GradBuffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::Zeros(const Shape& shape, bool requires_grad) {
  return Full(shape, 0.0, requires_grad);
}

Tensor Tensor::Full(const Shape& shape, double value, bool requires_grad) {
  return FromVector(shape, std::vector<double>(NumElements(shape), value),
                    requires_grad);
}

Tensor Tensor::FromVector(const Shape& shape, std::vector<double> values,
                          bool requires_grad) {
  for (int d : shape) {
    if (d < 0) ThrowUsage("tensor.bad_shape", "negative dimension");
  }
  if (values.size() != NumElements(shape)) {
    ThrowUsage("tensor.bad_shape",
               "value count " + std::to_string(values.size()) +
                   " does not match shape " + ShapeString(shape));
  }
  auto impl = std::make_shared<TensorData>();
  impl->shape = shape;
  impl->value = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return FromVector({}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) {
    ThrowUsage("tensor.not_scalar",
               "item() on tensor of shape " + ShapeString(shape()));
  }
  return impl_->value[0];
}

void Tensor::ZeroGrad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::Detach() const {
  return FromVector(shape(), impl_->value, false);
}

Tensor Tensor::Clone() const {
  return FromVector(shape(), impl_->value, impl_->requires_grad);
}

void Tensor::Backward() const {
  if (numel() != 1) {
    ThrowUsage("autodiff.non_scalar",
               "backward() needs a scalar loss, got shape " +
                   ShapeString(shape()));
  }
  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<TensorData*> order;
  std::unordered_set<TensorData*> visited;
  std::vector<std::pair<TensorData*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorData* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (TensorData* node : order) {
    if (node->backward) node->grad.assign(node->value.size(), 0.0);
  }
  impl_->GradBuffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

bool GradEnabled() { return grad_enabled; }

Tensor MakeResult(Shape shape, std::vector<double> value, std::string op,
                  std::vector<Tensor> parents, BackwardFn backward) {
  auto impl = std::make_shared<TensorData>();
  impl->shape = std::move(shape);
  impl->value = std::move(value);
  impl->op = std::move(op);
  if (grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) {
                                   return p.defined() && p.requires_grad();
                                 });
    if (any) {
      impl->requires_grad = true;
      for (auto& p : parents) {
        if (p.defined()) impl->parents.push_back(p.impl());
      }
      impl->backward = std::move(backward);
    }
  }
  return Tensor(std::move(impl));
}

}  // namespace b2b
