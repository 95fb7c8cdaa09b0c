#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtmrc/matrix_seq.hpp"

namespace mtmrc {

// Row operation of the Gauss-Jordan factorization. Indices are 0-based.
//   swap:    exchange rows i and j
//   scale:   row i := alpha * row i        (alpha(0) != 0)
//   row_add: row j := row j + alpha * row i
struct ElementaryOp {
  enum class Kind { swap, scale, row_add };
  Kind kind;
  std::size_t i;
  std::size_t j = 0;
  std::optional<RealSeq> alpha;
};

// Ops listed in application order: applying them to A left to right gives
// the identity, so applying them to the identity gives A^(-1).
struct GaussFactorization {
  std::vector<ElementaryOp> ops;
};

enum class InverseMethod { series, recurrence, newton, gauss_jordan };

// Inverse of A(0) after the singularity test |det| < 1e-12 * ||A(0)||_F^s;
// throws NotInvertibleError when it fails. Row-major s*s values.
std::vector<double> origin_inverse(const MatrixSeq& a);

MatrixSeq inverse_series(const MatrixSeq& a);
MatrixSeq inverse_recurrence(const MatrixSeq& a);
MatrixSeq inverse_newton(const MatrixSeq& a);
// Newton iterate B_N after `iterations` steps from B_0 = A(0)^(-1), embedded
// in A's grid. I - A*B_N vanishes on total degrees below 2^N.
MatrixSeq newton_iterate(const MatrixSeq& a, std::size_t iterations);
// Number of steps inverse_newton takes on this grid: smallest N with
// 2^N > k_1 + ... + k_d.
std::size_t newton_steps(const Grid& grid) noexcept;

std::pair<MatrixSeq, GaussFactorization> inverse_gauss_jordan(const MatrixSeq& a);

MatrixSeq invert(const MatrixSeq& a, InverseMethod method = InverseMethod::gauss_jordan);

// Row-level application of one op; equal to elementary_matrix(op) * a.
MatrixSeq apply_elementary(const ElementaryOp& op, const MatrixSeq& a);
MatrixSeq elementary_matrix(const ElementaryOp& op, const Grid& grid, std::size_t s);
// Applies the ops in order to `start` (the identity when omitted).
MatrixSeq replay(const GaussFactorization& f, const MatrixSeq& start);
MatrixSeq replay(const GaussFactorization& f, const Grid& grid, std::size_t s);

const char* to_string(InverseMethod m) noexcept;
InverseMethod parse_inverse_method(const std::string& name);

}  // namespace mtmrc
