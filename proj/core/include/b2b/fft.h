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

#ifndef B2B_FFT_H_
#define B2B_FFT_H_

#include <complex>
#include <memory>
#include <span>

namespace b2b {

// Real-input FFT of fixed size n backed by FFTW. An instance owns scratch
// buffers and is not safe to share between threads; create one per thread.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  // in: n real samples; out: n/2 + 1 bins, unnormalized.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out);
  // in: n/2 + 1 bins; out: n samples scaled by 1/n so that
  // Inverse(Forward(x)) == x. Imaginary parts of DC and Nyquist are ignored.
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out);

 private:
  struct Plans;
  int n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace b2b

#endif  // B2B_FFT_H_
