#include "mtmrc/convolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "fft_backend.hpp"
#include "mtmrc/errors.hpp"
#include "mtmrc/parallel.hpp"

namespace mtmrc {

namespace {

std::atomic<std::size_t> g_fft_threshold{256};

void require_states(const MatrixSeq& a, const MatrixSeq& b) {
  if (a.states() != b.states())
    throw DimensionError("convolve: state count mismatch (" + std::to_string(a.states()) + " vs " +
                         std::to_string(b.states()) + ")");
  if (a.dims() != b.dims()) throw DimensionError("convolve: dimension mismatch");
}

MatrixSeq fit(const MatrixSeq& a, const Grid& box) {
  return a.grid() == box ? a : restrict_to(a, box);
}

// C[k] += A[l] B[k-l] for all l <= k. S > 0 fixes the block size at compile
// time for the common small state counts; S == 0 reads it at run time.
template <std::size_t S>
void direct_kernel(const Grid& box, std::size_t s_rt, const double* a, const double* b, double* c) {
  const std::size_t s = S ? S : s_rt;
  const std::size_t blk = s * s;
  const std::size_t d = box.dims();
  const auto strides = box.strides();
  std::vector<std::size_t> k(d, 0), l(d, 0);
  std::vector<double> acc(blk);
  for (std::size_t kf = 0; kf < box.point_count(); ++kf) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(l.begin(), l.end(), 0);
    std::size_t lf = 0;
    const std::size_t inner = k[d - 1];
    while (true) {
      for (std::size_t t = 0; t <= inner; ++t) {
        const double* pa = a + (lf + t) * blk;
        const double* pb = b + (kf - lf - t) * blk;
        for (std::size_t i = 0; i < s; ++i)
          for (std::size_t r = 0; r < s; ++r) {
            const double x = pa[i * s + r];
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < s; ++j) acc[i * s + j] += x * pb[r * s + j];
          }
      }
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
    std::copy(acc.begin(), acc.end(), c + kf * blk);
    for (std::size_t ax = d; ax-- > 0;) {
      if (k[ax] < box.bound(ax)) {
        ++k[ax];
        break;
      }
      k[ax] = 0;
    }
  }
}

std::vector<std::size_t> padded_shape_of(const Grid& box) { return detail::product_shape(box); }

std::size_t product_of(const std::vector<std::size_t>& v) {
  std::size_t n = 1;
  for (auto x : v) n *= x;
  return n;
}

Grid shape_as_grid(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> b(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) b[a] = shape[a] - 1;
  return Grid(std::move(b));
}

// Lowest total degree carrying a nonzero entry; SIZE_MAX marks a zero
// sequence.
std::size_t lowest_degree(const MatrixSeq& a, const std::vector<std::size_t>& degrees) {
  std::size_t low = std::numeric_limits<std::size_t>::max();
  for (std::size_t p = 0; p < a.point_count(); ++p) {
    const auto m = a.matrix(p);
    if (degrees[p] < low && std::any_of(m.begin(), m.end(), [](double x) { return x != 0.0; })) low = degrees[p];
  }
  return low;
}

bool origin_only(const MatrixSeq& a) {
  const auto v = a.data();
  return std::all_of(v.begin() + static_cast<std::ptrdiff_t>(a.block()), v.end(), [](double x) { return x == 0.0; });
}

// Product with an operand supported at the origin: a pointwise matrix
// product, exact for the identity.
MatrixSeq constant_product(const MatrixSeq& a, const MatrixSeq& b, bool a_constant) {
  const Grid box = min_grid(a.grid(), b.grid());
  const MatrixSeq af = fit(a, box);
  const MatrixSeq bf = fit(b, box);
  const std::size_t s = a.states();
  MatrixSeq out(box, s);
  for (std::size_t p = 0; p < box.point_count(); ++p) {
    const auto x = af.matrix(a_constant ? 0 : p);
    const auto y = bf.matrix(a_constant ? p : 0);
    auto z = out.matrix(p);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t r = 0; r < s; ++r) {
        const double xv = x[i * s + r];
        if (xv == 0.0) continue;
        for (std::size_t j = 0; j < s; ++j) z[i * s + j] += xv * y[r * s + j];
      }
  }
  return out;
}

}  // namespace

std::size_t fft_dispatch_threshold() noexcept { return g_fft_threshold.load(); }
void set_fft_dispatch_threshold(std::size_t points) noexcept { g_fft_threshold.store(points); }

bool prefers_fft(const Grid& result_grid) noexcept {
  return product_of(padded_shape_of(result_grid)) > fft_dispatch_threshold();
}

MatrixSeq convolve_direct(const MatrixSeq& a, const MatrixSeq& b) {
  require_states(a, b);
  const Grid box = min_grid(a.grid(), b.grid());
  const MatrixSeq af = fit(a, box);
  const MatrixSeq bf = fit(b, box);
  const std::size_t s = a.states();
  MatrixSeq out(box, s);
  const double* pa = af.data().data();
  const double* pb = bf.data().data();
  double* pc = out.data().data();
  switch (s) {
    case 1: direct_kernel<1>(box, s, pa, pb, pc); break;
    case 2: direct_kernel<2>(box, s, pa, pb, pc); break;
    case 3: direct_kernel<3>(box, s, pa, pb, pc); break;
    default: direct_kernel<0>(box, s, pa, pb, pc); break;
  }
  return out;
}

MatrixSeq convolve_fft(const MatrixSeq& a, const MatrixSeq& b) {
  using detail::cplx;
  require_states(a, b);
  const Grid box = min_grid(a.grid(), b.grid());
  const MatrixSeq af = fit(a, box);
  const MatrixSeq bf = fit(b, box);
  const std::size_t s = a.states();
  const std::size_t blk = s * s;
  const auto shape = padded_shape_of(box);
  const auto plan = detail::real_plan(shape);
  const auto offsets = box_offsets(box, shape_as_grid(shape).strides());
  const std::size_t n = box.point_count();
  const std::size_t m = plan->spectrum_count();

  auto nonzero_entry = [&](const MatrixSeq& x, std::size_t e) {
    for (std::size_t p = 0; p < n; ++p)
      if (x.data()[p * blk + e] != 0.0) return true;
    return false;
  };
  std::vector<char> a_nz(blk), b_nz(blk);
  for (std::size_t e = 0; e < blk; ++e) {
    a_nz[e] = nonzero_entry(af, e);
    b_nz[e] = nonzero_entry(bf, e);
  }

  // Spectra of every scalar component, one transform per nonzero entry.
  std::vector<detail::FftwArray<cplx>> sa(blk), sb(blk);
  parallel_for(2 * blk, [&](std::size_t task) {
    const bool is_a = task < blk;
    const std::size_t e = is_a ? task : task - blk;
    if (!(is_a ? a_nz[e] : b_nz[e])) return;
    const MatrixSeq& src = is_a ? af : bf;
    detail::FftwArray<double> buf(plan->real_count());
    for (std::size_t p = 0; p < n; ++p) buf[offsets[p]] = src.data()[p * blk + e];
    detail::FftwArray<cplx> spec(m, false);
    plan->forward(buf.data(), spec.data());
    (is_a ? sa : sb)[e] = std::move(spec);
  });

  MatrixSeq out(box, s);
  const double norm = 1.0 / static_cast<double>(plan->real_count());
  parallel_for(blk, [&](std::size_t e) {
    const std::size_t i = e / s;
    const std::size_t j = e % s;
    detail::FftwArray<cplx> acc(m);
    bool any = false;
    for (std::size_t r = 0; r < s; ++r) {
      const std::size_t ea = i * s + r;
      const std::size_t eb = r * s + j;
      if (!a_nz[ea] || !b_nz[eb]) continue;
      any = true;
      detail::spectrum_product(sa[ea].data(), sb[eb].data(), acc.data(), m, true);
    }
    if (!any) return;
    detail::FftwArray<double> buf(plan->real_count(), false);
    plan->backward(acc.data(), buf.data());
    double* dst = out.data().data();
    for (std::size_t p = 0; p < n; ++p) dst[p * blk + e] = norm * buf[offsets[p]];
  });

  // Below the sum of the operands' lowest degrees the product is zero by
  // construction; clear the transform round-off there.
  const auto degrees = box.total_degrees();
  const std::size_t la = lowest_degree(af, degrees), lb = lowest_degree(bf, degrees);
  const std::size_t floor = (la == std::numeric_limits<std::size_t>::max() || lb == std::numeric_limits<std::size_t>::max())
                                ? std::numeric_limits<std::size_t>::max()
                                : la + lb;
  if (floor > 0)
    for (std::size_t p = 0; p < n; ++p)
      if (degrees[p] < floor) std::fill_n(out.data().data() + p * blk, blk, 0.0);
  // The origin value is the plain matrix product A(0) B(0).
  auto z = out.matrix(0);
  const auto x = af.matrix(0), y = bf.matrix(0);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < s; ++r) acc += x[i * s + r] * y[r * s + j];
      z[i * s + j] = acc;
    }
  return out;
}

MatrixSeq convolve(const MatrixSeq& a, const MatrixSeq& b, ConvolveMethod method) {
  switch (method) {
    case ConvolveMethod::direct: return convolve_direct(a, b);
    case ConvolveMethod::fft: return convolve_fft(a, b);
    case ConvolveMethod::automatic: break;
  }
  require_states(a, b);
  if (origin_only(a)) return constant_product(a, b, true);
  if (origin_only(b)) return constant_product(a, b, false);
  return prefers_fft(min_grid(a.grid(), b.grid())) ? convolve_fft(a, b) : convolve_direct(a, b);
}

MatrixSeq nfold(const MatrixSeq& a, long long n, ConvolveMethod method) {
  if (n < 0) throw ArgumentError("nfold: negative power " + std::to_string(n));
  MatrixSeq result = make_identity(a.grid(), a.states());
  if (n == 0) return result;
  MatrixSeq base = a;
  bool first = true;
  while (true) {
    if (n & 1) {
      result = first ? base : convolve(result, base, method);
      first = false;
    }
    n >>= 1;
    if (n == 0) break;
    base = convolve(base, base, method);
  }
  return result;
}

ComplexMatrixSeq dft(const MatrixSeq& a, const Grid& padded) {
  using detail::cplx;
  if (!padded.dominates(a.grid())) throw DimensionError("dft: padded grid must dominate the input grid");
  const std::size_t s = a.states();
  const std::size_t blk = s * s;
  std::vector<std::size_t> shape(padded.dims());
  for (std::size_t ax = 0; ax < padded.dims(); ++ax) shape[ax] = padded.extent(ax);
  const auto plan = detail::complex_plan(shape);
  const auto offsets = box_offsets(a.grid(), padded.strides());
  const std::size_t n = padded.point_count();
  ComplexMatrixSeq out{padded, s, std::vector<cplx>(n * blk)};
  detail::FftwArray<cplx> in(n), spec(n);
  for (std::size_t e = 0; e < blk; ++e) {
    std::fill(in.data(), in.data() + n, cplx{});
    for (std::size_t p = 0; p < offsets.size(); ++p) in[offsets[p]] = a.data()[p * blk + e];
    plan->forward(in.data(), spec.data());
    for (std::size_t p = 0; p < n; ++p) out.data[p * blk + e] = spec[p];
  }
  return out;
}

MatrixSeq idft(const ComplexMatrixSeq& a) {
  using detail::cplx;
  const std::size_t s = a.s;
  const std::size_t blk = s * s;
  const std::size_t n = a.grid.point_count();
  if (a.data.size() != n * blk) throw DimensionError("idft: data length does not match grid");
  std::vector<std::size_t> shape(a.grid.dims());
  for (std::size_t ax = 0; ax < a.grid.dims(); ++ax) shape[ax] = a.grid.extent(ax);
  const auto plan = detail::complex_plan(shape);
  detail::FftwArray<cplx> in(n), vals(n);
  std::vector<double> re(n * blk);
  double max_re = 0.0, max_im = 0.0;
  const double norm = 1.0 / static_cast<double>(n);
  for (std::size_t e = 0; e < blk; ++e) {
    for (std::size_t p = 0; p < n; ++p) in[p] = a.data[p * blk + e];
    plan->backward(in.data(), vals.data());
    for (std::size_t p = 0; p < n; ++p) {
      const cplx v = vals[p] * norm;
      re[p * blk + e] = v.real();
      max_re = std::max(max_re, std::abs(v.real()));
      max_im = std::max(max_im, std::abs(v.imag()));
    }
  }
  if (max_im > 1e-9 * std::max(1.0, max_re))
    throw NumericalError("idft: imaginary residue " + std::to_string(max_im) + " exceeds 1e-9");
  return MatrixSeq(a.grid, s, std::move(re));
}

}  // namespace mtmrc
