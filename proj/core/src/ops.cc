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

#include "b2b/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

#include "b2b/error.h"
#include "b2b/rng.h"

namespace b2b {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using Impl = std::shared_ptr<TensorData>;

[[noreturn]] void ShapeError(const std::string& op, const Shape& a,
                             const Shape& b, const std::string& detail) {
  ThrowUsage("autodiff.shape_mismatch", op + ": incompatible shapes " +
                                            ShapeString(a) + " and " +
                                            ShapeString(b) + " (" + detail +
                                            ")");
}

void RequireRank(const std::string& op, const Tensor& t, int rank) {
  if (t.rank() != rank) {
    ThrowUsage("autodiff.shape_mismatch",
               op + ": expected rank " + std::to_string(rank) + ", got " +
                   ShapeString(t.shape()));
  }
}

void RequireSameShape(const std::string& op, const Tensor& a,
                      const Tensor& b) {
  if (a.shape() != b.shape()) ShapeError(op, a.shape(), b.shape(), "must match");
}

// dst (+)= a * b; vector-shaped results are summed in index order.
template <class A, class B>
void Product(Eigen::Map<RowMat> dst, const A& a, const B& b, bool accumulate) {
  if (dst.rows() > 1 && dst.cols() > 1) {
    if (accumulate) {
      dst.noalias() += a * b;
    } else {
      dst.noalias() = a * b;
    }
    return;
  }
  for (Eigen::Index i = 0; i < dst.rows(); ++i) {
    for (Eigen::Index j = 0; j < dst.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      dst(i, j) = accumulate ? dst(i, j) + acc : acc;
    }
  }
}

// Gradient buffer of a parent, or nullptr when it does not need one.
double* GradOf(const Impl& t) {
  return (t && t->requires_grad) ? t->GradBuffer().data() : nullptr;
}

// Convolution geometry shared by the forward and adjoint kernels: an image
// of [channels, height, width] and a sliding window producing out_h x out_w
// positions.
struct Geometry {
  int channels, height, width;
  Hw kernel, stride, pad;
  int out_h, out_w;

  int col_rows() const { return channels * kernel.h * kernel.w; }
  int col_cols() const { return out_h * out_w; }
};

void Im2Col(const double* img, const Geometry& g, double* cols) {
  for (int c = 0; c < g.channels; ++c) {
    for (int kh = 0; kh < g.kernel.h; ++kh) {
      for (int kw = 0; kw < g.kernel.w; ++kw) {
        double* row = cols + (static_cast<std::ptrdiff_t>(c * g.kernel.h + kh) * g.kernel.w + kw) *
                                 g.col_cols();
        for (int oh = 0; oh < g.out_h; ++oh) {
          const int ih = oh * g.stride.h - g.pad.h + kh;
          double* dst = row + static_cast<std::ptrdiff_t>(oh) * g.out_w;
          if (ih < 0 || ih >= g.height) {
            std::fill_n(dst, g.out_w, 0.0);
            continue;
          }
          const double* src = img + (static_cast<std::ptrdiff_t>(c) * g.height + ih) * g.width;
          for (int ow = 0; ow < g.out_w; ++ow) {
            const int iw = ow * g.stride.w - g.pad.w + kw;
            dst[ow] = (iw >= 0 && iw < g.width) ? src[iw] : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of Im2Col's adjoint.
void Col2Im(const double* cols, const Geometry& g, double* img) {
  for (int c = 0; c < g.channels; ++c) {
    for (int kh = 0; kh < g.kernel.h; ++kh) {
      for (int kw = 0; kw < g.kernel.w; ++kw) {
        const double* row = cols + (static_cast<std::ptrdiff_t>(c * g.kernel.h + kh) * g.kernel.w + kw) *
                                       g.col_cols();
        for (int oh = 0; oh < g.out_h; ++oh) {
          const int ih = oh * g.stride.h - g.pad.h + kh;
          if (ih < 0 || ih >= g.height) continue;
          const double* src = row + static_cast<std::ptrdiff_t>(oh) * g.out_w;
          double* dst = img + (static_cast<std::ptrdiff_t>(c) * g.height + ih) * g.width;
          for (int ow = 0; ow < g.out_w; ++ow) {
            const int iw = ow * g.stride.w - g.pad.w + kw;
            if (iw >= 0 && iw < g.width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

template <typename Fwd, typename Deriv>
Tensor Unary(const Tensor& x, const std::string& op, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  Impl xi = x.impl();
  return MakeResult(x.shape(), std::move(out), op, {x},
                    [xi, deriv](TensorData& self) {
                      double* gx = GradOf(xi);
                      if (!gx) return;
                      for (std::size_t i = 0; i < self.value.size(); ++i) {
                        gx[i] += self.grad[i] * deriv(xi->value[i], self.value[i]);
                      }
                    });
}

Tensor SumTo(const Tensor& x, const std::string& op, double scale) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Impl xi = x.impl();
  return MakeResult({}, {acc * scale}, op, {x}, [xi, scale](TensorData& self) {
    double* gx = GradOf(xi);
    if (!gx) return;
    const double g = self.grad[0] * scale;
    for (std::size_t i = 0; i < xi->value.size(); ++i) gx[i] += g;
  });
}

}  // namespace

int ConvOutputSize(int in, int kernel, int stride, int pad) {
  const int numer = in + 2 * pad - kernel;
  if (numer < 0 || stride <= 0) {
    ThrowUsage("autodiff.shape_mismatch",
               "conv2d: kernel " + std::to_string(kernel) +
                   " does not fit input " + std::to_string(in) +
                   " with padding " + std::to_string(pad));
  }
  return numer / stride + 1;
}

int ConvTransposeOutputSize(int in, int kernel, int stride, int pad) {
  const int out = (in - 1) * stride - 2 * pad + kernel;
  if (out <= 0) {
    ThrowUsage("autodiff.shape_mismatch",
               "conv_transpose2d: non-positive output size");
  }
  return out;
}

Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Hw stride, Hw padding) {
  RequireRank("conv2d", x, 4);
  RequireRank("conv2d", weight, 4);
  if (x.dim(1) != weight.dim(1)) {
    ShapeError("conv2d", x.shape(), weight.shape(), "input channels differ");
  }
  const int n = x.dim(0);
  const int out_c = weight.dim(0);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_c)) {
    ShapeError("conv2d", weight.shape(), bias.shape(), "bias length");
  }
  Geometry g{x.dim(1), x.dim(2), x.dim(3), {weight.dim(2), weight.dim(3)},
             stride, padding, 0, 0};
  g.out_h = ConvOutputSize(g.height, g.kernel.h, stride.h, padding.h);
  g.out_w = ConvOutputSize(g.width, g.kernel.w, stride.w, padding.w);

  const std::size_t in_size = static_cast<std::size_t>(g.channels) * g.height * g.width;
  const std::size_t out_plane = static_cast<std::size_t>(g.col_cols());
  std::vector<double> out(static_cast<std::size_t>(n) * out_c * out_plane);
  std::vector<double> cols(static_cast<std::size_t>(g.col_rows()) * out_plane);
  Eigen::Map<const RowMat> w_mat(weight.data().data(), out_c, g.col_rows());
  for (int b = 0; b < n; ++b) {
    Im2Col(x.data().data() + b * in_size, g, cols.data());
    Eigen::Map<const RowMat> col_mat(cols.data(), g.col_rows(), g.col_cols());
    Eigen::Map<RowMat> y(out.data() + static_cast<std::size_t>(b) * out_c * out_plane,
                         out_c, g.col_cols());
    Product(y, w_mat, col_mat, false);
    if (bias.defined()) y.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.data().data(), out_c);
  }

  Impl xi = x.impl(), wi = weight.impl(), bi = bias.defined() ? bias.impl() : nullptr;
  return MakeResult(
      {n, out_c, g.out_h, g.out_w}, std::move(out), "conv2d", {x, weight, bias},
      [xi, wi, bi, g, n, out_c, in_size, out_plane](TensorData& self) {
        double* gx = GradOf(xi);
        double* gw = GradOf(wi);
        double* gb = GradOf(bi);
        std::vector<double> cols(static_cast<std::size_t>(g.col_rows()) * out_plane);
        Eigen::Map<const RowMat> w_mat(wi->value.data(), out_c, g.col_rows());
        for (int b = 0; b < n; ++b) {
          Eigen::Map<const RowMat> dy(self.grad.data() + static_cast<std::size_t>(b) * out_c * out_plane,
                                      out_c, g.col_cols());
          if (gb) {
            for (int o = 0; o < out_c; ++o) {
              double acc = 0.0;
              for (Eigen::Index k = 0; k < dy.cols(); ++k) acc += dy(o, k);
              gb[o] += acc;
            }
          }
          if (gw) {
            Im2Col(xi->value.data() + b * in_size, g, cols.data());
            Eigen::Map<const RowMat> col_mat(cols.data(), g.col_rows(), g.col_cols());
            Product(Eigen::Map<RowMat>(gw, out_c, g.col_rows()), dy, col_mat.transpose(), true);
          }
          if (gx) {
            Eigen::Map<RowMat> dcols(cols.data(), g.col_rows(), g.col_cols());
            Product(dcols, w_mat.transpose(), dy, false);
            Col2Im(cols.data(), g, gx + b * in_size);
          }
        }
      });
}

Tensor ConvTranspose2d(const Tensor& x, const Tensor& weight,
                       const Tensor& bias, Hw stride, Hw padding) {
  RequireRank("conv_transpose2d", x, 4);
  RequireRank("conv_transpose2d", weight, 4);
  if (x.dim(1) != weight.dim(0)) {
    ShapeError("conv_transpose2d", x.shape(), weight.shape(),
               "input channels differ");
  }
  const int n = x.dim(0);
  const int in_c = x.dim(1);
  const int out_c = weight.dim(1);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_c)) {
    ShapeError("conv_transpose2d", weight.shape(), bias.shape(), "bias length");
  }
  const Hw kernel{weight.dim(2), weight.dim(3)};
  const int out_h = ConvTransposeOutputSize(x.dim(2), kernel.h, stride.h, padding.h);
  const int out_w = ConvTransposeOutputSize(x.dim(3), kernel.w, stride.w, padding.w);
  // Geometry of the forward convolution this op is the adjoint of: it maps
  // the [out_c, out_h, out_w] output back onto the input grid.
  const Geometry g{out_c, out_h, out_w, kernel, stride, padding, x.dim(2), x.dim(3)};

  const std::size_t in_plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  const std::size_t out_size = static_cast<std::size_t>(out_c) * out_h * out_w;
  std::vector<double> out(static_cast<std::size_t>(n) * out_size, 0.0);
  std::vector<double> cols(static_cast<std::size_t>(g.col_rows()) * in_plane);
  Eigen::Map<const RowMat> w_mat(weight.data().data(), in_c, g.col_rows());
  for (int b = 0; b < n; ++b) {
    Eigen::Map<const RowMat> xb(x.data().data() + b * in_c * in_plane, in_c,
                                static_cast<Eigen::Index>(in_plane));
    Eigen::Map<RowMat> col_mat(cols.data(), g.col_rows(), static_cast<Eigen::Index>(in_plane));
    Product(col_mat, w_mat.transpose(), xb, false);
    double* yb = out.data() + b * out_size;
    Col2Im(cols.data(), g, yb);
    if (bias.defined()) {
      const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
      for (int c = 0; c < out_c; ++c) {
        const double bv = bias.data()[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < plane; ++i) yb[c * plane + i] += bv;
      }
    }
  }

  Impl xi = x.impl(), wi = weight.impl(), bi = bias.defined() ? bias.impl() : nullptr;
  return MakeResult(
      {n, out_c, out_h, out_w}, std::move(out), "conv_transpose2d",
      {x, weight, bias},
      [xi, wi, bi, g, n, in_c, out_c, in_plane, out_size](TensorData& self) {
        double* gx = GradOf(xi);
        double* gw = GradOf(wi);
        double* gb = GradOf(bi);
        std::vector<double> cols(static_cast<std::size_t>(g.col_rows()) * in_plane);
        Eigen::Map<const RowMat> w_mat(wi->value.data(), in_c, g.col_rows());
        const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
        for (int b = 0; b < n; ++b) {
          const double* dy = self.grad.data() + b * out_size;
          if (gb) {
            for (int c = 0; c < out_c; ++c) {
              double acc = 0.0;
              for (std::size_t i = 0; i < plane; ++i) acc += dy[c * plane + i];
              gb[c] += acc;
            }
          }
          if (!gx && !gw) continue;
          Im2Col(dy, g, cols.data());
          Eigen::Map<const RowMat> dcols(cols.data(), g.col_rows(), static_cast<Eigen::Index>(in_plane));
          if (gx) {
            Product(Eigen::Map<RowMat>(gx + b * in_c * in_plane, in_c,
                                       static_cast<Eigen::Index>(in_plane)),
                    w_mat, dcols, true);
          }
          if (gw) {
            Eigen::Map<const RowMat> xb(xi->value.data() + b * in_c * in_plane, in_c,
                                        static_cast<Eigen::Index>(in_plane));
            Product(Eigen::Map<RowMat>(gw, in_c, g.col_rows()), xb, dcols.transpose(), true);
          }
        }
      });
}

Tensor BatchNorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats& stats, bool training) {
  RequireRank("batch_norm2d", x, 4);
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (gamma.numel() != static_cast<std::size_t>(c) ||
      beta.numel() != static_cast<std::size_t>(c) ||
      stats.running_mean.size() != static_cast<std::size_t>(c)) {
    ShapeError("batch_norm2d", x.shape(), gamma.shape(), "channel count");
  }
  const std::size_t count = static_cast<std::size_t>(n) * plane;
  if (training && count < 2) {
    ThrowUsage("autodiff.shape_mismatch",
               "batch_norm2d: training mode needs more than one value per "
               "channel, got " + ShapeString(x.shape()));
  }
  const auto xv = x.data();
  std::vector<double> mean(static_cast<std::size_t>(c)), inv_std(static_cast<std::size_t>(c));
  for (int ch = 0; ch < c; ++ch) {
    const auto k = static_cast<std::size_t>(ch);
    if (training) {
      double sum = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = xv.data() + (static_cast<std::size_t>(b) * c + k) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = xv.data() + (static_cast<std::size_t>(b) * c + k) * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / static_cast<double>(count);
      mean[k] = mu;
      inv_std[k] = 1.0 / std::sqrt(var + stats.eps);
      stats.running_mean[k] = (1.0 - stats.momentum) * stats.running_mean[k] + stats.momentum * mu;
      const double unbiased = sq / static_cast<double>(count - 1);
      stats.running_var[k] = (1.0 - stats.momentum) * stats.running_var[k] + stats.momentum * unbiased;
    } else {
      mean[k] = stats.running_mean[k];
      inv_std[k] = 1.0 / std::sqrt(stats.running_var[k] + stats.eps);
    }
  }

  std::vector<double> xhat(xv.size()), out(xv.size());
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const auto k = static_cast<std::size_t>(ch);
      const std::size_t off = (static_cast<std::size_t>(b) * c + k) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        xhat[off + i] = (xv[off + i] - mean[k]) * inv_std[k];
        out[off + i] = gamma.data()[k] * xhat[off + i] + beta.data()[k];
      }
    }
  }

  Impl xi = x.impl(), gi = gamma.impl(), bi = beta.impl();
  return MakeResult(
      x.shape(), std::move(out), training ? "batch_norm2d_train" : "batch_norm2d_eval",
      {x, gamma, beta},
      [xi, gi, bi, xhat = std::move(xhat), inv_std, n, c, plane, count,
       training](TensorData& self) {
        double* gx = GradOf(xi);
        double* gg = GradOf(gi);
        double* gb = GradOf(bi);
        for (int ch = 0; ch < c; ++ch) {
          const auto k = static_cast<std::size_t>(ch);
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int b = 0; b < n; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * c + k) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_dy += self.grad[off + i];
              sum_dy_xhat += self.grad[off + i] * xhat[off + i];
            }
          }
          if (gg) gg[k] += sum_dy_xhat;
          if (gb) gb[k] += sum_dy;
          if (!gx) continue;
          const double g = gi->value[k];
          const double m = static_cast<double>(count);
          for (int b = 0; b < n; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * c + k) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              const double dy = self.grad[off + i];
              if (training) {
                gx[off + i] += g * inv_std[k] / m *
                               (m * dy - sum_dy - xhat[off + i] * sum_dy_xhat);
              } else {
                gx[off + i] += g * inv_std[k] * dy;
              }
            }
          }
        }
      });
}

Tensor LeakyRelu(const Tensor& x, double slope) {
  return Unary(
      x, "leaky_relu", [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor Relu(const Tensor& x) {
  return Unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor Tanh(const Tensor& x) {
  return Unary(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor Sigmoid(const Tensor& x) {
  return Unary(
      x, "sigmoid",
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor Dropout(const Tensor& x, double p, uint64_t seed, bool active) {
  if (!(p >= 0.0 && p < 1.0)) {
    ThrowUsage("autodiff.bad_dropout", "dropout probability must lie in [0, 1)");
  }
  if (!active || p == 0.0) {
    return Unary(
        x, "dropout_identity", [](double v) { return v; },
        [](double, double) { return 1.0; });
  }
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = ToUnit(SplitMix64::At(seed, i)) >= p ? keep_scale : 0.0;
  }
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * mask[i];
  Impl xi = x.impl();
  return MakeResult(x.shape(), std::move(out), "dropout", {x},
                    [xi, mask = std::move(mask)](TensorData& self) {
                      double* gx = GradOf(xi);
                      if (!gx) return;
                      for (std::size_t i = 0; i < mask.size(); ++i) {
                        gx[i] += self.grad[i] * mask[i];
                      }
                    });
}

Tensor ConcatChannels(const Tensor& a, const Tensor& b) {
  RequireRank("concat_channels", a, 4);
  RequireRank("concat_channels", b, 4);
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    ShapeError("concat_channels", a.shape(), b.shape(),
               "batch and spatial dims must match");
  }
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  const std::size_t sa = ca * plane, sb = cb * plane;
  std::vector<double> out(static_cast<std::size_t>(n) * (sa + sb));
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + i * sa, sa, out.data() + i * (sa + sb));
    std::copy_n(b.data().data() + i * sb, sb, out.data() + i * (sa + sb) + sa);
  }
  Impl ai = a.impl(), bi = b.impl();
  return MakeResult({n, ca + cb, a.dim(2), a.dim(3)}, std::move(out),
                    "concat_channels", {a, b},
                    [ai, bi, n, sa, sb](TensorData& self) {
                      double* ga = GradOf(ai);
                      double* gb = GradOf(bi);
                      for (int i = 0; i < n; ++i) {
                        const double* g = self.grad.data() + i * (sa + sb);
                        if (ga) {
                          for (std::size_t k = 0; k < sa; ++k) ga[i * sa + k] += g[k];
                        }
                        if (gb) {
                          for (std::size_t k = 0; k < sb; ++k) gb[i * sb + k] += g[sa + k];
                        }
                      }
                    });
}

Tensor BceWithLogits(const Tensor& logits, const Tensor& targets) {
  RequireSameShape("bce_with_logits", logits, targets);
  const auto z = logits.data();
  const auto y = targets.data();
  const double inv_n = 1.0 / static_cast<double>(z.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    acc += std::max(z[i], 0.0) - z[i] * y[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  Impl li = logits.impl(), ti = targets.impl();
  return MakeResult({}, {acc * inv_n}, "bce_with_logits", {logits, targets},
                    [li, ti, inv_n](TensorData& self) {
                      double* gl = GradOf(li);
                      double* gt = GradOf(ti);
                      const double g = self.grad[0] * inv_n;
                      for (std::size_t i = 0; i < li->value.size(); ++i) {
                        const double v = li->value[i];
                        const double sig = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                                    : std::exp(v) / (1.0 + std::exp(v));
                        if (gl) gl[i] += g * (sig - ti->value[i]);
                        if (gt) gt[i] -= g * v;
                      }
                    });
}

Tensor BceWithLogits(const Tensor& logits, double target) {
  return BceWithLogits(logits, Tensor::Full(logits.shape(), target));
}

Tensor L1Mean(const Tensor& x, const Tensor& y) {
  RequireSameShape("l1_mean", x, y);
  const double inv_n = 1.0 / static_cast<double>(x.numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) acc += std::abs(x.data()[i] - y.data()[i]);
  Impl xi = x.impl(), yi = y.impl();
  return MakeResult({}, {acc * inv_n}, "l1_mean", {x, y},
                    [xi, yi, inv_n](TensorData& self) {
                      double* gx = GradOf(xi);
                      double* gy = GradOf(yi);
                      const double g = self.grad[0] * inv_n;
                      for (std::size_t i = 0; i < xi->value.size(); ++i) {
                        const double d = xi->value[i] - yi->value[i];
                        const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                        if (gx) gx[i] += g * s;
                        if (gy) gy[i] -= g * s;
                      }
                    });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape("add", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  Impl ai = a.impl(), bi = b.impl();
  return MakeResult(a.shape(), std::move(out), "add", {a, b},
                    [ai, bi](TensorData& self) {
                      double* ga = GradOf(ai);
                      double* gb = GradOf(bi);
                      for (std::size_t i = 0; i < self.grad.size(); ++i) {
                        if (ga) ga[i] += self.grad[i];
                        if (gb) gb[i] += self.grad[i];
                      }
                    });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  RequireSameShape("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  Impl ai = a.impl(), bi = b.impl();
  return MakeResult(a.shape(), std::move(out), "sub", {a, b},
                    [ai, bi](TensorData& self) {
                      double* ga = GradOf(ai);
                      double* gb = GradOf(bi);
                      for (std::size_t i = 0; i < self.grad.size(); ++i) {
                        if (ga) ga[i] += self.grad[i];
                        if (gb) gb[i] -= self.grad[i];
                      }
                    });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape("mul", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  Impl ai = a.impl(), bi = b.impl();
  return MakeResult(a.shape(), std::move(out), "mul", {a, b},
                    [ai, bi](TensorData& self) {
                      double* ga = GradOf(ai);
                      double* gb = GradOf(bi);
                      for (std::size_t i = 0; i < self.grad.size(); ++i) {
                        if (ga) ga[i] += self.grad[i] * bi->value[i];
                        if (gb) gb[i] += self.grad[i] * ai->value[i];
                      }
                    });
}

Tensor Div(const Tensor& a, const Tensor& b) {
  RequireSameShape("div", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] / b.data()[i];
  Impl ai = a.impl(), bi = b.impl();
  return MakeResult(a.shape(), std::move(out), "div", {a, b},
                    [ai, bi](TensorData& self) {
                      double* ga = GradOf(ai);
                      double* gb = GradOf(bi);
                      for (std::size_t i = 0; i < self.grad.size(); ++i) {
                        const double inv = 1.0 / bi->value[i];
                        if (ga) ga[i] += self.grad[i] * inv;
                        if (gb) gb[i] -= self.grad[i] * self.value[i] * inv;
                      }
                    });
}

Tensor Scale(const Tensor& x, double factor) {
  return Unary(
      x, "scale", [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor AddScalar(const Tensor& x, double offset) {
  return Unary(
      x, "add_scalar", [offset](double v) { return v + offset; },
      [](double, double) { return 1.0; });
}

Tensor Exp(const Tensor& x) {
  return Unary(
      x, "exp", [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor Log(const Tensor& x) {
  return Unary(
      x, "log", [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor Abs(const Tensor& x) {
  return Unary(
      x, "abs", [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor Sqrt(const Tensor& x) {
  return Unary(
      x, "sqrt", [](double v) { return std::sqrt(v); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor Square(const Tensor& x) {
  return Unary(
      x, "square", [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Tensor Sum(const Tensor& x) { return SumTo(x, "sum", 1.0); }

Tensor Mean(const Tensor& x) {
  return SumTo(x, "mean", 1.0 / static_cast<double>(x.numel()));
}

}  // namespace b2b
