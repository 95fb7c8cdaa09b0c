#include "mtmrc/matrix_seq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtmrc/errors.hpp"

namespace mtmrc {

MatrixSeq::MatrixSeq(Grid grid, std::size_t s)
    : grid_(std::move(grid)), s_(s), data_(grid_.point_count() * s * s, 0.0) {
  if (s == 0) throw DimensionError("state count must be positive");
}

MatrixSeq::MatrixSeq(Grid grid, std::size_t s, std::vector<double> data)
    : grid_(std::move(grid)), s_(s), data_(std::move(data)) {
  if (s == 0) throw DimensionError("state count must be positive");
  if (data_.size() != grid_.point_count() * s * s)
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(grid_.point_count()) + " points of " + std::to_string(s) +
                         "x" + std::to_string(s) + " matrices");
}

double MatrixSeq::at(std::span<const std::size_t> index, std::size_t i, std::size_t j) const {
  if (i >= s_ || j >= s_) throw ArgumentError("matrix index out of range");
  return (*this)(grid_.flat(index), i, j);
}

MatrixSeq MatrixSeq::entry(std::size_t i, std::size_t j) const {
  if (i >= s_ || j >= s_) throw ArgumentError("matrix index out of range");
  MatrixSeq out(grid_, 1);
  for (std::size_t p = 0; p < point_count(); ++p) out.data_[p] = (*this)(p, i, j);
  return out;
}

void MatrixSeq::set_entry(std::size_t i, std::size_t j, const MatrixSeq& values) {
  if (i >= s_ || j >= s_) throw ArgumentError("matrix index out of range");
  require_real(values, "set_entry");
  if (!(values.grid() == grid_)) throw DimensionError("set_entry: grid mismatch");
  for (std::size_t p = 0; p < point_count(); ++p) (*this)(p, i, j) = values.data_[p];
}

double MatrixSeq::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool MatrixSeq::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_real(const MatrixSeq& a, const char* what) {
  if (a.states() != 1) throw DimensionError(std::string(what) + ": expected a real sequence (s = 1)");
}

void require_same_shape(const MatrixSeq& a, const MatrixSeq& b, const char* what) {
  if (a.states() != b.states())
    throw DimensionError(std::string(what) + ": state count mismatch (" + std::to_string(a.states()) +
                         " vs " + std::to_string(b.states()) + ")");
  if (!(a.grid() == b.grid())) throw DimensionError(std::string(what) + ": grid mismatch");
}

MatrixSeq make_identity(const Grid& grid, std::size_t s) {
  MatrixSeq out(grid, s);
  for (std::size_t i = 0; i < s; ++i) out(0, i, i) = 1.0;
  return out;
}

MatrixSeq make_ones_diag(const Grid& grid, std::size_t s) {
  MatrixSeq out(grid, s);
  for (std::size_t p = 0; p < grid.point_count(); ++p)
    for (std::size_t i = 0; i < s; ++i) out(p, i, i) = 1.0;
  return out;
}

RealSeq make_real(const Grid& grid, std::vector<double> values) {
  return MatrixSeq(grid, 1, std::move(values));
}

MatrixSeq make_diag(std::span<const RealSeq> diagonal) {
  if (diagonal.empty()) throw DimensionError("make_diag: empty diagonal");
  const Grid& g = diagonal.front().grid();
  MatrixSeq out(g, diagonal.size());
  for (std::size_t i = 0; i < diagonal.size(); ++i) {
    require_real(diagonal[i], "make_diag");
    if (!(diagonal[i].grid() == g)) throw DimensionError("make_diag: grid mismatch");
    for (std::size_t p = 0; p < g.point_count(); ++p) out(p, i, i) = diagonal[i].data()[p];
  }
  return out;
}

MatrixSeq make_constant_at_origin(const Grid& grid, std::size_t s, std::span<const double> m) {
  if (m.size() != s * s) throw DimensionError("constant matrix size mismatch");
  MatrixSeq out(grid, s);
  std::copy(m.begin(), m.end(), out.matrix(0).begin());
  return out;
}

MatrixSeq add(const MatrixSeq& a, const MatrixSeq& b) {
  require_same_shape(a, b, "add");
  std::vector<double> v(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t n = 0; n < v.size(); ++n) v[n] += bd[n];
  return MatrixSeq(a.grid(), a.states(), std::move(v));
}

MatrixSeq sub(const MatrixSeq& a, const MatrixSeq& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> v(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t n = 0; n < v.size(); ++n) v[n] -= bd[n];
  return MatrixSeq(a.grid(), a.states(), std::move(v));
}

MatrixSeq scale(const MatrixSeq& a, double c) {
  std::vector<double> v(a.data().begin(), a.data().end());
  for (double& x : v) x *= c;
  return MatrixSeq(a.grid(), a.states(), std::move(v));
}

MatrixSeq restrict_to(const MatrixSeq& a, const Grid& target) {
  if (!a.grid().dominates(target))
    throw DimensionError("restrict: target grid exceeds the source grid");
  MatrixSeq out(target, a.states());
  const auto offsets = box_offsets(target, a.grid().strides());
  const std::size_t blk = a.block();
  for (std::size_t p = 0; p < offsets.size(); ++p) {
    auto src = a.matrix(offsets[p]);
    std::copy(src.begin(), src.end(), out.data().begin() + p * blk);
  }
  return out;
}

MatrixSeq embed_into(const MatrixSeq& a, const Grid& target) {
  if (!target.dominates(a.grid())) throw DimensionError("embed: target grid must dominate the source grid");
  MatrixSeq out(target, a.states());
  const auto offsets = box_offsets(a.grid(), target.strides());
  const std::size_t blk = a.block();
  for (std::size_t p = 0; p < offsets.size(); ++p) {
    auto src = a.matrix(p);
    std::copy(src.begin(), src.end(), out.data().begin() + offsets[p] * blk);
  }
  return out;
}

MatrixSeq cumulative_sum(const MatrixSeq& a) {
  std::vector<double> v(a.data().begin(), a.data().end());
  const Grid& g = a.grid();
  const std::size_t blk = a.block();
  // Prefix sums along each axis in turn give the box sums.
  for (std::size_t ax = 0; ax < g.dims(); ++ax) {
    const std::size_t stride = g.strides()[ax];
    const std::size_t ext = g.extent(ax);
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      if ((p / stride) % ext == 0) continue;
      const std::size_t prev = p - stride;
      for (std::size_t e = 0; e < blk; ++e) v[p * blk + e] += v[prev * blk + e];
    }
  }
  return MatrixSeq(g, a.states(), std::move(v));
}

double max_abs_diff(const MatrixSeq& a, const MatrixSeq& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t n = 0; n < ad.size(); ++n) m = std::max(m, std::abs(ad[n] - bd[n]));
  return m;
}

double max_rel_diff(const MatrixSeq& a, const MatrixSeq& b) {
  return max_abs_diff(a, b) / std::max(1.0, b.max_abs());
}

}  // namespace mtmrc
