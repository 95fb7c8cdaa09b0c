#pragma once

// FFTW-backed real and complex multidimensional transforms plus the box
// convolver used by the inversion routines. Internal to the library.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mtmrc/grid.hpp"

namespace mtmrc::detail {

using cplx = std::complex<double>;

// fftw_malloc'd array. All transform buffers come from here so that every
// buffer handed to a cached plan has the alignment the plan was made for.
template <class T>
class FftwArray {
 public:
  FftwArray() = default;
  explicit FftwArray(std::size_t n, bool zero_fill = true);
  FftwArray(const FftwArray&) = delete;
  FftwArray& operator=(const FftwArray&) = delete;
  FftwArray(FftwArray&& o) noexcept : ptr_(o.ptr_), size_(o.size_) {
    o.ptr_ = nullptr;
    o.size_ = 0;
  }
  FftwArray& operator=(FftwArray&& o) noexcept;
  ~FftwArray();

  T* data() noexcept { return ptr_; }
  const T* data() const noexcept { return ptr_; }
  std::size_t size() const noexcept { return size_; }
  T& operator[](std::size_t n) noexcept { return ptr_[n]; }
  const T& operator[](std::size_t n) const noexcept { return ptr_[n]; }
  std::span<T> span() noexcept { return {ptr_, size_}; }
  std::span<const T> span() const noexcept { return {ptr_, size_}; }
  bool empty() const noexcept { return size_ == 0; }

 private:
  T* ptr_ = nullptr;
  std::size_t size_ = 0;
};

// Row-major r2c / c2r pair for one padded shape. The half spectrum has the
// last axis shortened to L/2 + 1.
class RealFftPlan {
 public:
  explicit RealFftPlan(std::vector<std::size_t> shape);
  ~RealFftPlan();
  RealFftPlan(const RealFftPlan&) = delete;
  RealFftPlan& operator=(const RealFftPlan&) = delete;

  std::span<const std::size_t> shape() const noexcept { return shape_; }
  std::size_t real_count() const noexcept { return real_count_; }
  std::size_t spectrum_count() const noexcept { return spectrum_count_; }

  void forward(double* in, cplx* out) const;
  // Unnormalized; destroys `in`.
  void backward(cplx* in, double* out) const;

 private:
  std::vector<std::size_t> shape_;
  std::size_t real_count_ = 0;
  std::size_t spectrum_count_ = 0;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

// Full complex transform, sign -1 forward and +1 backward (unnormalized).
class ComplexFftPlan {
 public:
  explicit ComplexFftPlan(std::vector<std::size_t> shape);
  ~ComplexFftPlan();
  ComplexFftPlan(const ComplexFftPlan&) = delete;
  ComplexFftPlan& operator=(const ComplexFftPlan&) = delete;

  std::size_t count() const noexcept { return count_; }
  void forward(cplx* in, cplx* out) const;
  void backward(cplx* in, cplx* out) const;

 private:
  std::vector<std::size_t> shape_;
  std::size_t count_ = 0;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

// z[w] (+)= x[w] * y[w], written out by hand: std::complex multiplication
// goes through the NaN-recovery libcall without -ffast-math.
inline void spectrum_product(const cplx* x, const cplx* y, cplx* z, std::size_t m, bool accumulate) {
  const double* a = reinterpret_cast<const double*>(x);
  const double* b = reinterpret_cast<const double*>(y);
  double* c = reinterpret_cast<double*>(z);
  for (std::size_t w = 0; w < m; ++w) {
    const double re = a[2 * w] * b[2 * w] - a[2 * w + 1] * b[2 * w + 1];
    const double im = a[2 * w] * b[2 * w + 1] + a[2 * w + 1] * b[2 * w];
    if (accumulate) {
      c[2 * w] += re;
      c[2 * w + 1] += im;
    } else {
      c[2 * w] = re;
      c[2 * w + 1] = im;
    }
  }
}

// Cached plans, safe to call from several threads.
std::shared_ptr<const RealFftPlan> real_plan(const std::vector<std::size_t>& shape);
std::shared_ptr<const ComplexFftPlan> complex_plan(const std::vector<std::size_t>& shape);

// Smallest transform length >= n used for zero padding.
std::size_t padded_length(std::size_t n);

// Padded shape for truncated products on `box`: every axis holds 2*(k+1)-1
// samples without wrap-around.
std::vector<std::size_t> product_shape(const Grid& box);

// Truncated scalar products on a fixed box: trunc(a * b) restricted to the
// box, either by FFT on the padded shape or by direct summation. Operands are
// prepared once and may be reused across many products. Holds scratch
// buffers, so one instance must not be shared between threads.
class BoxConvolver {
 public:
  struct Operand {
    std::vector<double> values;
    FftwArray<cplx> spectrum;
    bool zero = true;
  };

  BoxConvolver(const Grid& box, bool use_fft);

  const Grid& box() const noexcept { return box_; }
  bool uses_fft() const noexcept { return plan_ != nullptr; }

  Operand prepare(std::span<const double> values) const;
  Operand prepare(std::vector<double>&& values) const;
  // out += sign * trunc(a * b)
  void accumulate(const Operand& a, const Operand& b, double sign, std::span<double> out) const;
  std::vector<double> product(const Operand& a, const Operand& b) const;

 private:
  Grid box_;
  std::shared_ptr<const RealFftPlan> plan_;
  std::vector<std::size_t> padded_offsets_;
  double norm_ = 1.0;
  mutable FftwArray<double> input_scratch_;  // zero outside the box positions
  mutable FftwArray<double> real_scratch_;
  mutable FftwArray<cplx> spec_scratch_;
};

// Direct truncated scalar product on a box: out[k] += sign * sum_{l<=k} a[l] b[k-l].
void direct_scalar_accumulate(const Grid& box, std::span<const double> a, std::span<const double> b,
                              double sign, std::span<double> out);

}  // namespace mtmrc::detail
