#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mtmrc/matrix_seq.hpp"

namespace mtmrc {

// A validated semi-Markov kernel q truncated to its grid.
struct SemiMarkovKernel {
  MatrixSeq seq;
  std::vector<double> row_mass;  // sum over j and over the grid of q_ij
  double tail_tol = 0.0;
  bool allows_instantaneous = false;

  std::size_t states() const noexcept { return seq.states(); }
  const Grid& grid() const noexcept { return seq.grid(); }
};

// Embedded transitions P and one shifted bivariate Poisson law per current
// state: X | J_n = i  ~  BPoisson(alpha_i, beta_i, gamma_i) + (1, 1).
struct ParametricKernelSpec {
  Eigen::MatrixXd P;
  std::vector<double> alpha, beta, gamma;

  std::size_t states() const noexcept { return static_cast<std::size_t>(P.rows()); }
  // Throws ArgumentError when P is not stochastic or a parameter is out of range.
  void check() const;
};

// Negative entries (below -1e-14), row masses outside [1 - tail_tol, 1 + 1e-12]
// and (unless allowed) mass at the origin raise KernelValidationError.
SemiMarkovKernel validate_kernel(MatrixSeq seq, double tail_tol, bool allow_instantaneous = false);

// Bivariate Poisson pmf at (x1, x2).
double bpoisson_pmf(std::size_t x1, std::size_t x2, double alpha, double beta, double gamma);

// q_ij(k1, k2) = P_ij f_i(k1 - 1, k2 - 1), zero on the axes. Needs d = 2.
SemiMarkovKernel build_bpoisson_kernel(const ParametricKernelSpec& spec, const Grid& grid,
                                       double tail_tol = 1e-6);

// Q = dg(1) * q, the cumulated kernel.
MatrixSeq cumulated_kernel(const SemiMarkovKernel& q);
// Qbar_ij(k) = P(J_1 = j, X_1 > k coordinatewise | J_0 = i), by
// inclusion-exclusion over the events {X_u <= k_u}. Coordinates left free
// are read at the grid bound, and the empty-set term is p_ij.
MatrixSeq survival_kernel(const SemiMarkovKernel& q);

// Diagonal sequences built from the row sums h_i = sum_j q_ij.
struct SojournDistributions {
  MatrixSeq h;        // dg(h_i)
  MatrixSeq H;        // dg(H_i),  H_i = 1 * h_i
  MatrixSeq H_tilde;  // dg(1 - H_i)
  MatrixSeq H_bar;    // dg(P(X > k | J = i))
};
SojournDistributions sojourn_distributions(const SemiMarkovKernel& q);

// p_ij = sum_k q_ij(k), each row divided by its captured mass.
Eigen::MatrixXd embedded_chain(const SemiMarkovKernel& q);

// Kernel of the transformed increments phi(X). The result is one-dimensional
// on {0..max phi} and may carry mass at 0.
using PhiMap = std::function<std::size_t(std::span<const std::size_t>)>;
namespace phi {
PhiMap projection(std::size_t axis);
PhiMap product(std::size_t u, std::size_t v);
PhiMap total();
}  // namespace phi

SemiMarkovKernel phi_kernel(const SemiMarkovKernel& q, const PhiMap& map);
// phi_kernel with the projection on `axis` (0-based).
SemiMarkovKernel marginal_kernel(const SemiMarkovKernel& q, std::size_t axis);

}  // namespace mtmrc
