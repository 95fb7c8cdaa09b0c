#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mtmrc/inversion.hpp"
#include "mtmrc/kernel.hpp"
#include "mtmrc/matrix_seq.hpp"

namespace mtmrc {

// u = (I - q)^(-1), the renewal density.
MatrixSeq renewal_u(const SemiMarkovKernel& q, InverseMethod method = InverseMethod::gauss_jordan);

// U = dg(1) * u: U_ij(k) is the expected number of visits to j at jump
// times S_n <= k, the visit at n = 0 included.
MatrixSeq markov_renewal_function(const MatrixSeq& u);

// P = u * dg(1 - H): P_ij(k) = P(Z_k = j | Z_0 = i).
MatrixSeq smc_transition(const SemiMarkovKernel& q, const MatrixSeq& u);

// Markov renewal equation L = G + q * L, solved as L = u * G.
struct MreProblem {
  MatrixSeq G_known;
  SemiMarkovKernel q;
};
MatrixSeq solve_mre(const MreProblem& problem);
// Same, reusing an already computed u for the problem's kernel.
MatrixSeq solve_mre(const MreProblem& problem, const MatrixSeq& u);

struct FirstHitting {
  MatrixSeq g;  // pmf of the first hitting time of j from i
  MatrixSeq G;  // its cdf, dg(1) * g
};
// g = (u - I) * dg(u)^(-1), diagonal inverses by Newton iteration.
FirstHitting first_hitting(const MatrixSeq& u);
// g_ij = q_ij + sum_{r != j} q_ir * g_rj, solved point by point from q alone.
MatrixSeq first_hitting_recursive(const SemiMarkovKernel& q);

// q = I - (I + g * dg(u))^(-1)
MatrixSeq recover_kernel(const MatrixSeq& g, const MatrixSeq& u,
                         InverseMethod method = InverseMethod::gauss_jordan);

// Sojourn moments, indexed [state][axis] or [state][axis][axis]; pair tables
// m_ij^[u] are [i][j][axis] (0 where p_ij = 0).
struct SojournMoments {
  std::size_t s = 0, d = 0;
  std::vector<std::vector<double>> m;                // m_i^[u]
  std::vector<std::vector<std::vector<double>>> mm;  // m_i^[u,v], diagonal = m_i^[u,u]
  std::vector<std::vector<std::vector<double>>> c;   // c_i^[u,v] = m^[u,v] - m^[u] m^[v]
  std::vector<std::vector<std::vector<double>>> m_pair;
};

// Moments by weighted summation over the grid, normalized by row mass.
SojournMoments sojourn_moments(const SemiMarkovKernel& q);
// Closed forms for the shifted bivariate Poisson family.
SojournMoments sojourn_moments(const ParametricKernelSpec& spec);
// m_i^[u,v] through the one-dimensional kernel of the product X_u X_v:
// the mean of a nonnegative integer variable is the sum of its survival
// function.
std::vector<double> product_moment_via_kernel(const SemiMarkovKernel& q, std::size_t u, std::size_t v);

// Throws NotIrreducibleError if the positive-entry digraph of p is not
// strongly connected.
void require_irreducible(const Eigen::MatrixXd& p);
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p);

// mu[u](i, j): mean of coordinate u of the first passage time i -> j,
// from (I - p with column j zeroed) mu_.j = m^[u].
std::vector<Eigen::MatrixXd> first_passage_means(const Eigen::MatrixXd& p, const SojournMoments& mom);

struct RecurrenceMoments {
  std::size_t d = 0;
  std::vector<Eigen::MatrixXd> mu;       // first-passage means per axis
  std::vector<Eigen::VectorXd> mu_diag_ergodic;  // mbar^[u] / nu_j
  // [u][v] per target j, recurrence mean products from the ergodic formula
  std::vector<std::vector<Eigen::VectorXd>> mu2;
  // same quantity from the full linear system for E_i[S_u S_v]
  std::vector<std::vector<Eigen::VectorXd>> mu2_system;
  std::vector<Eigen::VectorXd> variance;                    // [u]
  std::vector<std::vector<Eigen::VectorXd>> covariance;     // [u][v]
  std::vector<std::vector<Eigen::VectorXd>> correlation;    // [u][v]
};

RecurrenceMoments recurrence_cross_moments(const Eigen::MatrixXd& p, const Eigen::VectorXd& nu,
                                           const SojournMoments& mom);

struct AnalysisOptions {
  InverseMethod method = InverseMethod::gauss_jordan;
  // When present, sojourn moments come from the closed forms.
  std::optional<ParametricKernelSpec> parametric;
};

struct MrcAnalysis {
  MatrixSeq u, U, P, g, G;
  Eigen::MatrixXd p;
  SojournMoments moments;
  bool ergodic = false;
  std::string warning;
  Eigen::VectorXd nu;
  RecurrenceMoments recurrence;
};

MrcAnalysis analyze(const SemiMarkovKernel& q, const AnalysisOptions& options = {});

}  // namespace mtmrc
