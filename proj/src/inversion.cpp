#include "mtmrc/inversion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "fft_backend.hpp"
#include "mtmrc/convolution.hpp"
#include "mtmrc/errors.hpp"

namespace mtmrc {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_matrix(std::span<const double> m, std::size_t s) {
  return Eigen::Map<const RowMat>(m.data(), static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
}

// Zero every point whose total degree is >= limit.
void truncate_degree(MatrixSeq& a, std::size_t limit) {
  const auto deg = a.grid().total_degrees();
  for (std::size_t p = 0; p < deg.size(); ++p)
    if (deg[p] >= limit) std::fill(a.matrix(p).begin(), a.matrix(p).end(), 0.0);
}

// Left-multiply every point of `a` by the constant matrix m.
MatrixSeq left_constant(std::span<const double> m, const MatrixSeq& a) {
  const std::size_t s = a.states();
  MatrixSeq out(a.grid(), s);
  const auto M = as_matrix(m, s);
  for (std::size_t p = 0; p < a.point_count(); ++p) {
    Eigen::Map<RowMat> dst(out.matrix(p).data(), s, s);
    dst.noalias() = M * as_matrix(a.matrix(p), s);
  }
  return out;
}

bool only_origin(std::span<const double> v, std::size_t blk) {
  return std::all_of(v.begin() + static_cast<std::ptrdiff_t>(blk), v.end(), [](double x) { return x == 0.0; });
}

template <std::size_t S>
void recurrence_kernel(const Grid& g, std::size_t s_rt, const double* a, const double* a0inv, double* b) {
  const std::size_t s = S ? S : s_rt;
  const std::size_t blk = s * s;
  const std::size_t d = g.dims();
  const auto strides = g.strides();
  std::vector<std::size_t> k(d, 0), l(d, 0);
  std::vector<double> acc(blk);
  std::copy(a0inv, a0inv + blk, b);
  for (std::size_t kf = 1; kf < g.point_count(); ++kf) {
    for (std::size_t ax = d; ax-- > 0;) {
      if (k[ax] < g.bound(ax)) {
        ++k[ax];
        break;
      }
      k[ax] = 0;
    }
    // acc = sum over l <= k, l != k of A(k - l) B(l)
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(l.begin(), l.end(), 0);
    std::size_t lf = 0;
    const std::size_t inner = k[d - 1];
    while (true) {
      const bool last_row = lf + inner == kf;
      const std::size_t stop = last_row ? inner : inner + 1;
      for (std::size_t t = 0; t < stop; ++t) {
        const double* pa = a + (kf - lf - t) * blk;
        const double* pb = b + (lf + t) * blk;
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
    double* dst = b + kf * blk;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        double v = 0.0;
        for (std::size_t r = 0; r < s; ++r) v -= a0inv[i * s + r] * acc[r * s + j];
        dst[i * s + j] = v;
      }
  }
}

}  // namespace

std::vector<double> origin_inverse(const MatrixSeq& a) {
  const std::size_t s = a.states();
  const auto A0 = as_matrix(a.matrix(0), s);
  const double fro = A0.norm();
  Eigen::PartialPivLU<RowMat> lu(A0);
  const double det = s == 1 ? A0(0, 0) : lu.determinant();
  if (!(fro > 0.0) || !std::isfinite(det) || std::abs(det) < 1e-12 * std::pow(fro, static_cast<double>(s)))
    throw NotInvertibleError("the origin matrix A(0) is singular (|det| = " + std::to_string(std::abs(det)) +
                             ")");
  RowMat inv = lu.inverse();
  return std::vector<double>(inv.data(), inv.data() + s * s);
}

MatrixSeq inverse_series(const MatrixSeq& a) {
  const std::size_t s = a.states();
  const auto a0inv = origin_inverse(a);
  // N = I - A A(0)^(-1); N(0) = 0, so N^(n) vanishes once n exceeds the
  // largest total degree and the Neumann sum is finite.
  MatrixSeq n(a.grid(), s);
  const auto M = as_matrix(a0inv, s);
  for (std::size_t p = 0; p < a.point_count(); ++p) {
    Eigen::Map<RowMat> dst(n.matrix(p).data(), s, s);
    dst.noalias() = -(as_matrix(a.matrix(p), s) * M);
  }
  for (std::size_t i = 0; i < s; ++i) n(0, i, i) += 1.0;
  for (double& x : n.matrix(0)) x = 0.0;

  const MatrixSeq id = make_identity(a.grid(), s);
  MatrixSeq sum = id;
  const std::size_t terms = a.grid().max_total_degree();
  for (std::size_t t = 0; t < terms; ++t) sum = id + convolve(n, sum);
  return left_constant(a0inv, sum);
}

MatrixSeq inverse_recurrence(const MatrixSeq& a) {
  const std::size_t s = a.states();
  const auto a0inv = origin_inverse(a);
  MatrixSeq b(a.grid(), s);
  const double* pa = a.data().data();
  double* pb = b.data().data();
  switch (s) {
    case 1: recurrence_kernel<1>(a.grid(), s, pa, a0inv.data(), pb); break;
    case 2: recurrence_kernel<2>(a.grid(), s, pa, a0inv.data(), pb); break;
    case 3: recurrence_kernel<3>(a.grid(), s, pa, a0inv.data(), pb); break;
    default: recurrence_kernel<0>(a.grid(), s, pa, a0inv.data(), pb); break;
  }
  return b;
}

std::size_t newton_steps(const Grid& grid) noexcept {
  const std::size_t total = grid.max_total_degree();
  std::size_t n = 0;
  while ((std::size_t{1} << n) <= total) ++n;
  return n;
}

namespace {

// Newton iteration for a scalar sequence on flat values, reusing one prepared
// operand per step instead of going through the matrix convolution.
std::vector<double> newton_scalar(const Grid& grid, std::span<const double> a, double a0inv,
                                  std::size_t iterations) {
  const std::size_t d = grid.dims();
  Grid box = Grid::cube(d, 0);
  std::vector<double> b{a0inv};
  for (std::size_t step = 0; step < iterations; ++step) {
    const std::size_t limit = std::size_t{1} << std::min<std::size_t>(step + 1, 62);
    std::vector<std::size_t> corner(d);
    for (std::size_t ax = 0; ax < d; ++ax) corner[ax] = std::min(grid.bound(ax), limit - 1);
    const Grid next(corner);
    std::vector<double> nb(next.point_count(), 0.0);
    const auto old_pos = box_offsets(box, next.strides());
    for (std::size_t p = 0; p < old_pos.size(); ++p) nb[old_pos[p]] = b[p];
    box = next;
    b = std::move(nb);

    const auto in_grid = box_offsets(box, grid.strides());
    std::vector<double> a_box(box.point_count());
    for (std::size_t p = 0; p < in_grid.size(); ++p) a_box[p] = a[in_grid[p]];
    const auto deg = box.total_degrees();

    const detail::BoxConvolver conv(box, prefers_fft(box));
    const auto A = conv.prepare(std::move(a_box));
    const auto B = conv.prepare(std::span<const double>(b));
    std::vector<double> residual(box.point_count(), 0.0);
    residual[0] = 1.0;
    conv.accumulate(A, B, -1.0, residual);
    for (std::size_t p = 0; p < deg.size(); ++p)
      if (deg[p] >= limit) residual[p] = 0.0;
    conv.accumulate(B, conv.prepare(std::move(residual)), 1.0, b);
    for (std::size_t p = 0; p < deg.size(); ++p)
      if (deg[p] >= limit) b[p] = 0.0;
  }
  std::vector<double> out(grid.point_count(), 0.0);
  const auto pos = box_offsets(box, grid.strides());
  for (std::size_t p = 0; p < pos.size(); ++p) out[pos[p]] = b[p];
  return out;
}

}  // namespace

MatrixSeq newton_iterate(const MatrixSeq& a, std::size_t iterations) {
  const std::size_t s = a.states();
  const auto a0inv = origin_inverse(a);
  const std::size_t d = a.dims();
  if (s == 1) {
    if (only_origin(a.data(), 1)) iterations = 0;
    return MatrixSeq(a.grid(), 1, newton_scalar(a.grid(), a.data(), a0inv[0], iterations));
  }
  MatrixSeq b = make_constant_at_origin(Grid::cube(d, 0), s, a0inv);
  if (only_origin(a.data(), s * s)) iterations = 0;
  for (std::size_t step = 0; step < iterations; ++step) {
    const std::size_t limit = std::size_t{1} << std::min<std::size_t>(step + 1, 62);
    std::vector<std::size_t> corner(d);
    for (std::size_t ax = 0; ax < d; ++ax) corner[ax] = std::min(a.grid().bound(ax), limit - 1);
    const Grid box(corner);
    b = embed_into(b, box);
    const MatrixSeq ab = convolve(restrict_to(a, box), b);
    MatrixSeq residual = make_identity(box, s) - ab;
    truncate_degree(residual, limit);
    b = b + convolve(b, residual);
    truncate_degree(b, limit);
  }
  return embed_into(b, a.grid());
}

MatrixSeq inverse_newton(const MatrixSeq& a) { return newton_iterate(a, newton_steps(a.grid())); }

namespace {

// One scalar cell of the augmented working matrix [A | I].
struct Cell {
  enum class Form { zero, delta, general };
  std::vector<double> v;
  Form form = Form::zero;
  std::optional<detail::BoxConvolver::Operand> operand;

  void classify() {
    operand.reset();
    if (std::all_of(v.begin() + 1, v.end(), [](double x) { return x == 0.0; }))
      form = v[0] == 0.0 ? Form::zero : Form::delta;
    else
      form = Form::general;
  }
};

const detail::BoxConvolver::Operand& operand_of(Cell& c, const detail::BoxConvolver& conv) {
  if (!c.operand) c.operand = conv.prepare(std::span<const double>(c.v));
  return *c.operand;
}

// dst += sign * x * y, with the zero and delta shortcuts.
void multiply_add(Cell& dst, Cell& x, Cell& y, double sign, const detail::BoxConvolver& conv) {
  if (x.form == Cell::Form::zero || y.form == Cell::Form::zero) return;
  if (x.form == Cell::Form::delta || y.form == Cell::Form::delta) {
    const Cell& other = x.form == Cell::Form::delta ? y : x;
    const double c = sign * (x.form == Cell::Form::delta ? x.v[0] : y.v[0]);
    for (std::size_t p = 0; p < dst.v.size(); ++p) dst.v[p] += c * other.v[p];
  } else {
    conv.accumulate(operand_of(x, conv), operand_of(y, conv), sign, dst.v);
  }
}

}  // namespace

std::pair<MatrixSeq, GaussFactorization> inverse_gauss_jordan(const MatrixSeq& a) {
  const std::size_t s = a.states();
  const Grid& grid = a.grid();
  const std::size_t n = grid.point_count();
  origin_inverse(a);  // singularity test on A(0)

  const detail::BoxConvolver conv(grid, prefers_fft(grid));
  std::vector<std::vector<Cell>> w(s);
  for (auto& row : w) row.resize(2 * s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < 2 * s; ++j) {
      Cell& c = w[i][j];
      c.v.assign(n, 0.0);
      if (j < s)
        for (std::size_t p = 0; p < n; ++p) c.v[p] = a(p, i, j);
      else if (j - s == i)
        c.v[0] = 1.0;
      c.classify();
    }

  GaussFactorization fact;
  double scale_ref = 0.0;
  for (double x : a.matrix(0)) scale_ref = std::max(scale_ref, std::abs(x));

  for (std::size_t c = 0; c < s; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < s; ++r)
      if (std::abs(w[r][c].v[0]) > std::abs(w[piv][c].v[0])) piv = r;
    if (!(std::abs(w[piv][c].v[0]) > 1e-14 * scale_ref))
      throw NotInvertibleError("pivot " + std::to_string(c + 1) + " has a zero constant term");
    if (piv != c) {
      std::swap(w[piv], w[c]);
      fact.ops.push_back({ElementaryOp::Kind::swap, c, piv, std::nullopt});
    }

    // Scale the pivot row by the inverse of its pivot entry.
    Cell alpha;
    if (w[c][c].form == Cell::Form::delta) {
      alpha.v.assign(n, 0.0);
      alpha.v[0] = 1.0 / w[c][c].v[0];
    } else {
      alpha.v = newton_scalar(grid, w[c][c].v, 1.0 / w[c][c].v[0], newton_steps(grid));
    }
    alpha.classify();
    const bool unit = alpha.form == Cell::Form::delta && alpha.v[0] == 1.0;
    if (!unit) fact.ops.push_back({ElementaryOp::Kind::scale, c, c, MatrixSeq(grid, 1, alpha.v)});
    for (std::size_t col = c + 1; col < 2 * s; ++col) {
      Cell& cell = w[c][col];
      if (unit || cell.form == Cell::Form::zero) continue;
      Cell scaled;
      scaled.v.assign(n, 0.0);
      multiply_add(scaled, alpha, cell, 1.0, conv);
      cell.v = std::move(scaled.v);
      cell.classify();
    }
    w[c][c].v.assign(n, 0.0);
    w[c][c].v[0] = 1.0;
    w[c][c].classify();

    // Clear column c in every other row.
    for (std::size_t r = 0; r < s; ++r) {
      if (r == c || w[r][c].form == Cell::Form::zero) continue;
      Cell& factor = w[r][c];
      std::vector<double> neg(factor.v);
      for (double& x : neg) x = -x;
      fact.ops.push_back({ElementaryOp::Kind::row_add, c, r, MatrixSeq(grid, 1, std::move(neg))});
      for (std::size_t col = c + 1; col < 2 * s; ++col) {
        if (w[c][col].form == Cell::Form::zero) continue;
        multiply_add(w[r][col], factor, w[c][col], -1.0, conv);
        w[r][col].classify();
      }
      factor.v.assign(n, 0.0);
      factor.classify();
    }
  }

  MatrixSeq inv(grid, s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      const auto& v = w[i][s + j].v;
      for (std::size_t p = 0; p < n; ++p) inv(p, i, j) = v[p];
    }
  return {std::move(inv), std::move(fact)};
}

MatrixSeq invert(const MatrixSeq& a, InverseMethod method) {
  switch (method) {
    case InverseMethod::series: return inverse_series(a);
    case InverseMethod::recurrence: return inverse_recurrence(a);
    case InverseMethod::newton: return inverse_newton(a);
    case InverseMethod::gauss_jordan: return inverse_gauss_jordan(a).first;
  }
  throw ArgumentError("unknown inversion method");
}

namespace {

void check_op(const ElementaryOp& op, std::size_t s, const Grid& grid) {
  if (op.i >= s || ((op.kind != ElementaryOp::Kind::scale) && op.j >= s))
    throw ArgumentError("elementary op row index out of range");
  if (op.kind != ElementaryOp::Kind::scale && op.i == op.j)
    throw ArgumentError("elementary op needs two distinct rows");
  if (op.kind != ElementaryOp::Kind::swap) {
    if (!op.alpha) throw ArgumentError("elementary op is missing its sequence parameter");
    require_real(*op.alpha, "elementary op");
    if (!op.alpha->grid().dominates(grid)) throw DimensionError("elementary op parameter grid too small");
    if (op.kind == ElementaryOp::Kind::scale && op.alpha->data()[0] == 0.0)
      throw NotInvertibleError("scale parameter has a zero constant term");
  }
}

}  // namespace

MatrixSeq apply_elementary(const ElementaryOp& op, const MatrixSeq& a) {
  const std::size_t s = a.states();
  check_op(op, s, a.grid());
  MatrixSeq out = a;
  switch (op.kind) {
    case ElementaryOp::Kind::swap:
      for (std::size_t p = 0; p < a.point_count(); ++p)
        for (std::size_t j = 0; j < s; ++j) std::swap(out(p, op.i, j), out(p, op.j, j));
      break;
    case ElementaryOp::Kind::scale: {
      const RealSeq alpha = restrict_to(*op.alpha, a.grid());
      for (std::size_t j = 0; j < s; ++j) out.set_entry(op.i, j, convolve(alpha, a.entry(op.i, j)));
      break;
    }
    case ElementaryOp::Kind::row_add: {
      const RealSeq alpha = restrict_to(*op.alpha, a.grid());
      for (std::size_t j = 0; j < s; ++j)
        out.set_entry(op.j, j, a.entry(op.j, j) + convolve(alpha, a.entry(op.i, j)));
      break;
    }
  }
  return out;
}

MatrixSeq elementary_matrix(const ElementaryOp& op, const Grid& grid, std::size_t s) {
  check_op(op, s, grid);
  MatrixSeq e = make_identity(grid, s);
  switch (op.kind) {
    case ElementaryOp::Kind::swap:
      e(0, op.i, op.i) = 0.0;
      e(0, op.j, op.j) = 0.0;
      e(0, op.i, op.j) = 1.0;
      e(0, op.j, op.i) = 1.0;
      break;
    case ElementaryOp::Kind::scale: e.set_entry(op.i, op.i, restrict_to(*op.alpha, grid)); break;
    case ElementaryOp::Kind::row_add: e.set_entry(op.j, op.i, restrict_to(*op.alpha, grid)); break;
  }
  return e;
}

MatrixSeq replay(const GaussFactorization& f, const MatrixSeq& start) {
  MatrixSeq m = start;
  for (const auto& op : f.ops) m = apply_elementary(op, m);
  return m;
}

MatrixSeq replay(const GaussFactorization& f, const Grid& grid, std::size_t s) {
  return replay(f, make_identity(grid, s));
}

const char* to_string(InverseMethod m) noexcept {
  switch (m) {
    case InverseMethod::series: return "series";
    case InverseMethod::recurrence: return "recurrence";
    case InverseMethod::newton: return "newton";
    case InverseMethod::gauss_jordan: return "gauss-jordan";
  }
  return "unknown";
}

InverseMethod parse_inverse_method(const std::string& name) {
  if (name == "series") return InverseMethod::series;
  if (name == "recurrence") return InverseMethod::recurrence;
  if (name == "newton") return InverseMethod::newton;
  if (name == "gauss-jordan" || name == "gauss_jordan") return InverseMethod::gauss_jordan;
  throw ArgumentError("unknown inversion method '" + name + "'");
}

}  // namespace mtmrc
