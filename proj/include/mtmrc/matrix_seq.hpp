#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mtmrc/grid.hpp"

namespace mtmrc {

// A d-dimensional sequence of s x s real matrices truncated to a Grid.
// Storage is dense: point-major in grid row-major order, each matrix
// row-major, so entry (i, j) at point p lives at data[p*s*s + i*s + j].
class MatrixSeq {
 public:
  MatrixSeq(Grid grid, std::size_t s);
  MatrixSeq(Grid grid, std::size_t s, std::vector<double> data);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t states() const noexcept { return s_; }
  std::size_t dims() const noexcept { return grid_.dims(); }
  std::size_t point_count() const noexcept { return grid_.point_count(); }
  std::size_t block() const noexcept { return s_ * s_; }

  double operator()(std::size_t point, std::size_t i, std::size_t j) const {
    return data_[point * s_ * s_ + i * s_ + j];
  }
  double& operator()(std::size_t point, std::size_t i, std::size_t j) {
    return data_[point * s_ * s_ + i * s_ + j];
  }

  // Entry (i, j) at a multi-index.
  double at(std::span<const std::size_t> index, std::size_t i, std::size_t j) const;

  std::span<const double> matrix(std::size_t point) const {
    return {data_.data() + point * s_ * s_, s_ * s_};
  }
  std::span<double> matrix(std::size_t point) { return {data_.data() + point * s_ * s_, s_ * s_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  // Scalar component sequence a_ij as a RealSeq on the same grid.
  MatrixSeq entry(std::size_t i, std::size_t j) const;
  void set_entry(std::size_t i, std::size_t j, const MatrixSeq& values);

  double max_abs() const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const MatrixSeq& a, const MatrixSeq& b) {
    return a.s_ == b.s_ && a.grid_ == b.grid_ && a.data_ == b.data_;
  }

 private:
  Grid grid_;
  std::size_t s_;
  std::vector<double> data_;
};

// Scalar sequences are matrix sequences with s = 1.
using RealSeq = MatrixSeq;

void require_real(const MatrixSeq& a, const char* what);
void require_same_shape(const MatrixSeq& a, const MatrixSeq& b, const char* what);

// Identity of the convolution algebra: I_s at the origin, O_s elsewhere.
MatrixSeq make_identity(const Grid& grid, std::size_t s);
// dg(1_s): diag(1, ..., 1) at every point; convolving with it sums over l <= k.
MatrixSeq make_ones_diag(const Grid& grid, std::size_t s);
RealSeq make_real(const Grid& grid, std::vector<double> values);
// Diagonal matrix sequence with the given scalar sequences on the diagonal.
MatrixSeq make_diag(std::span<const RealSeq> diagonal);
// Constant matrix placed at the origin (s*s row-major values).
MatrixSeq make_constant_at_origin(const Grid& grid, std::size_t s, std::span<const double> m);

MatrixSeq add(const MatrixSeq& a, const MatrixSeq& b);
MatrixSeq sub(const MatrixSeq& a, const MatrixSeq& b);
MatrixSeq scale(const MatrixSeq& a, double c);

inline MatrixSeq operator+(const MatrixSeq& a, const MatrixSeq& b) { return add(a, b); }
inline MatrixSeq operator-(const MatrixSeq& a, const MatrixSeq& b) { return sub(a, b); }
inline MatrixSeq operator*(double c, const MatrixSeq& a) { return scale(a, c); }

// Drop every point outside `target`; target must be dominated by a's grid.
MatrixSeq restrict_to(const MatrixSeq& a, const Grid& target);
// Zero-pad a onto `target`; target must dominate a's grid.
MatrixSeq embed_into(const MatrixSeq& a, const Grid& target);

// Cumulative sum over the box [0, k] at every k, i.e. dg(1_s) * a.
MatrixSeq cumulative_sum(const MatrixSeq& a);

double max_abs_diff(const MatrixSeq& a, const MatrixSeq& b);
// max |a-b| / max(1, max|b|)
double max_rel_diff(const MatrixSeq& a, const MatrixSeq& b);

}  // namespace mtmrc
