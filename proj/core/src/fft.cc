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

#include "b2b/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "b2b/error.h"

namespace b2b {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  ~Plans() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
    fftw_free(real);
    fftw_free(spectrum);
  }
};

RealFft::RealFft(int n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n < 2) ThrowUsage("fft.bad_size", "FFT size must be at least 2");
  std::lock_guard<std::mutex> lock(PlannerMutex());
  plans_->real = fftw_alloc_real(static_cast<std::size_t>(n));
  plans_->spectrum = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  // FFTW_ESTIMATE keeps plans (and therefore results) run-to-run identical.
  plans_->forward = fftw_plan_dft_r2c_1d(n, plans_->real, plans_->spectrum,
                                         FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_1d(n, plans_->spectrum, plans_->real,
                                         FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
  std::copy_n(in.begin(), n_, plans_->real);
  fftw_execute(plans_->forward);
  const auto* spec =
      reinterpret_cast<const std::complex<double>*>(plans_->spectrum);
  std::copy_n(spec, bins(), out.begin());
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
  auto* spec = reinterpret_cast<std::complex<double>*>(plans_->spectrum);
  std::copy_n(in.begin(), bins(), spec);
  fftw_execute(plans_->inverse);
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = plans_->real[i] * scale;
}

}  // namespace b2b
