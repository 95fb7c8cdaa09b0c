#include "fft_backend.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <new>

#include "mtmrc/errors.hpp"

namespace mtmrc::detail {

template <class T>
FftwArray<T>::FftwArray(std::size_t n, bool zero_fill) : size_(n) {
  if (n == 0) return;
  ptr_ = static_cast<T*>(fftw_malloc(n * sizeof(T)));
  if (!ptr_) throw std::bad_alloc();
  if (zero_fill) std::fill(ptr_, ptr_ + n, T{});
}

template <class T>
FftwArray<T>& FftwArray<T>::operator=(FftwArray&& o) noexcept {
  if (this != &o) {
    if (ptr_) fftw_free(ptr_);
    ptr_ = o.ptr_;
    size_ = o.size_;
    o.ptr_ = nullptr;
    o.size_ = 0;
  }
  return *this;
}

template <class T>
FftwArray<T>::~FftwArray() {
  if (ptr_) fftw_free(ptr_);
}

template class FftwArray<double>;
template class FftwArray<cplx>;

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<int> as_int(const std::vector<std::size_t>& shape) {
  return std::vector<int>(shape.begin(), shape.end());
}

}  // namespace

RealFftPlan::RealFftPlan(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw DimensionError("empty FFT shape");
  real_count_ = 1;
  for (auto n : shape_) real_count_ *= n;
  spectrum_count_ = real_count_ / shape_.back() * (shape_.back() / 2 + 1);
  FftwArray<double> r(real_count_);
  FftwArray<cplx> c(spectrum_count_);
  const auto n = as_int(shape_);
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c(static_cast<int>(n.size()), n.data(), r.data(),
                           reinterpret_cast<fftw_complex*>(c.data()), FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_c2r(static_cast<int>(n.size()), n.data(), reinterpret_cast<fftw_complex*>(c.data()),
                           r.data(), FFTW_ESTIMATE);
  if (!fwd_ || !bwd_) throw NumericalError("FFTW planning failed");
}

RealFftPlan::~RealFftPlan() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void RealFftPlan::forward(double* in, cplx* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), in, reinterpret_cast<fftw_complex*>(out));
}

void RealFftPlan::backward(cplx* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(in), out);
}

ComplexFftPlan::ComplexFftPlan(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw DimensionError("empty FFT shape");
  count_ = 1;
  for (auto n : shape_) count_ *= n;
  FftwArray<cplx> a(count_), b(count_);
  const auto n = as_int(shape_);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), pa, pb, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!fwd_ || !bwd_) throw NumericalError("FFTW planning failed");
}

ComplexFftPlan::~ComplexFftPlan() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void ComplexFftPlan::forward(cplx* in, cplx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), reinterpret_cast<fftw_complex*>(in),
                   reinterpret_cast<fftw_complex*>(out));
}

void ComplexFftPlan::backward(cplx* in, cplx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(in),
                   reinterpret_cast<fftw_complex*>(out));
}

std::shared_ptr<const RealFftPlan> real_plan(const std::vector<std::size_t>& shape) {
  static std::mutex m;
  static std::map<std::vector<std::size_t>, std::shared_ptr<const RealFftPlan>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[shape];
  if (!slot) slot = std::make_shared<RealFftPlan>(shape);
  return slot;
}

std::shared_ptr<const ComplexFftPlan> complex_plan(const std::vector<std::size_t>& shape) {
  static std::mutex m;
  static std::map<std::vector<std::size_t>, std::shared_ptr<const ComplexFftPlan>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[shape];
  if (!slot) slot = std::make_shared<ComplexFftPlan>(shape);
  return slot;
}

std::size_t padded_length(std::size_t n) {
  std::size_t L = 1;
  while (L < n) L <<= 1;
  return L;
}

std::vector<std::size_t> product_shape(const Grid& box) {
  std::vector<std::size_t> shape(box.dims());
  for (std::size_t a = 0; a < box.dims(); ++a) shape[a] = padded_length(2 * box.extent(a) - 1);
  return shape;
}

void direct_scalar_accumulate(const Grid& box, std::span<const double> a, std::span<const double> b,
                              double sign, std::span<double> out) {
  const std::size_t d = box.dims();
  const auto strides = box.strides();
  std::vector<std::size_t> k(d, 0);
  std::vector<std::size_t> l(d, 0);
  const std::size_t n = box.point_count();
  for (std::size_t kf = 0; kf < n; ++kf) {
    double acc = 0.0;
    // l runs over the box [0, k]; flat(k - l) = flat(k) - flat(l).
    std::fill(l.begin(), l.end(), 0);
    std::size_t lf = 0;
    const std::size_t inner = k[d - 1];
    while (true) {
      const double* pa = a.data() + lf;
      const double* pb = b.data() + (kf - lf);
      for (std::size_t t = 0; t <= inner; ++t) acc += pa[t] * pb[-static_cast<std::ptrdiff_t>(t)];
      std::size_t ax = d - 1;
      bool done = true;
      while (ax-- > 0) {
        if (l[ax] < k[ax]) {
          ++l[ax];
          lf += strides[ax];
          done = false;
          break;
        }
        lf -= l[ax] * strides[ax];
        l[ax] = 0;
      }
      if (done) break;
    }
    out[kf] += sign * acc;
    for (std::size_t ax = d; ax-- > 0;) {
      if (k[ax] < box.bound(ax)) {
        ++k[ax];
        break;
      }
      k[ax] = 0;
    }
  }
}

BoxConvolver::BoxConvolver(const Grid& box, bool use_fft) : box_(box) {
  if (!use_fft) return;
  const auto shape = product_shape(box_);
  plan_ = real_plan(shape);
  padded_offsets_ = box_offsets(box_, Grid([&] {
                                        std::vector<std::size_t> b(shape.size());
                                        for (std::size_t a = 0; a < shape.size(); ++a) b[a] = shape[a] - 1;
                                        return b;
                                      }())
                                          .strides());
  norm_ = 1.0 / static_cast<double>(plan_->real_count());
  input_scratch_ = FftwArray<double>(plan_->real_count());
  real_scratch_ = FftwArray<double>(plan_->real_count(), false);
  spec_scratch_ = FftwArray<cplx>(plan_->spectrum_count(), false);
}

BoxConvolver::Operand BoxConvolver::prepare(std::span<const double> values) const {
  return prepare(std::vector<double>(values.begin(), values.end()));
}

BoxConvolver::Operand BoxConvolver::prepare(std::vector<double>&& values) const {
  if (values.size() != box_.point_count()) throw DimensionError("operand size does not match box");
  Operand op;
  op.values = std::move(values);
  op.zero = std::all_of(op.values.begin(), op.values.end(), [](double v) { return v == 0.0; });
  if (plan_ && !op.zero) {
    for (std::size_t p = 0; p < padded_offsets_.size(); ++p) input_scratch_[padded_offsets_[p]] = op.values[p];
    op.spectrum = FftwArray<cplx>(plan_->spectrum_count(), false);
    plan_->forward(input_scratch_.data(), op.spectrum.data());
  }
  return op;
}

void BoxConvolver::accumulate(const Operand& a, const Operand& b, double sign, std::span<double> out) const {
  if (a.zero || b.zero) return;
  if (!plan_) {
    direct_scalar_accumulate(box_, a.values, b.values, sign, out);
    return;
  }
  const std::size_t m = plan_->spectrum_count();
  spectrum_product(a.spectrum.data(), b.spectrum.data(), spec_scratch_.data(), m, false);
  plan_->backward(spec_scratch_.data(), real_scratch_.data());
  const double f = sign * norm_;
  // the constant term needs no transform; taking it exactly keeps A(0)-level
  // algebra free of round-off
  out[0] += sign * a.values[0] * b.values[0];
  for (std::size_t p = 1; p < padded_offsets_.size(); ++p) out[p] += f * real_scratch_[padded_offsets_[p]];
}

std::vector<double> BoxConvolver::product(const Operand& a, const Operand& b) const {
  std::vector<double> out(box_.point_count(), 0.0);
  accumulate(a, b, 1.0, out);
  return out;
}

}  // namespace mtmrc::detail
