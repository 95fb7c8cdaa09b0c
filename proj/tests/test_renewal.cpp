#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "mtmrc/convolution.hpp"
#include "mtmrc/errors.hpp"
#include "mtmrc/renewal.hpp"
#include "oracles.hpp"

using namespace mtmrc;

namespace {

const SemiMarkovKernel& example_kernel(std::size_t bound) {
  static std::map<std::size_t, SemiMarkovKernel> cache;
  auto it = cache.find(bound);
  if (it == cache.end())
    it = cache.emplace(bound, build_bpoisson_kernel(oracle::example_spec(), Grid({bound, bound}), 1.0)).first;
  return it->second;
}

SemiMarkovKernel random_kernel(const Grid& g, std::size_t s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return validate_kernel(oracle::random_kernel(g, s, rng), 1e-12);
}

// g_ij = q_ij + sum_{r != j} q_ir * g_rj by fixed-point iteration with the
// oracle product; q(0) = 0 makes it exact after max-degree + 1 sweeps.
MatrixSeq hitting_fixed_point(const MatrixSeq& q) {
  const std::size_t s = q.states();
  MatrixSeq g(q.grid(), s);
  for (std::size_t sweep = 0; sweep <= q.grid().max_total_degree(); ++sweep) {
    MatrixSeq off = g;
    for (std::size_t p = 0; p < off.point_count(); ++p)
      for (std::size_t j = 0; j < s; ++j) off(p, j, j) = 0.0;
    MatrixSeq next = oracle::convolve(q, off);
    // (q * off)_ij sums over r of q_ir off_rj, and off_jj = 0 removes r = j
    for (std::size_t x = 0; x < next.data().size(); ++x) next.data()[x] += q.data()[x];
    g = next;
  }
  return g;
}

// Second moment of the recurrence time of each state along one axis, from
// the one-dimensional marginal chain on a long grid: sum_k k^2 g_jj(k).
std::vector<double> marginal_recurrence_moment(std::size_t axis, std::size_t length, int power) {
  const auto spec = oracle::example_spec();
  MatrixSeq q(Grid({length}), 3);
  for (std::size_t k = 1; k <= length; ++k)
    for (std::size_t i = 0; i < 3; ++i) {
      const double lambda = (axis == 0 ? spec.alpha[i] : spec.beta[i]) + spec.gamma[i];
      for (std::size_t j = 0; j < 3; ++j) q(k, i, j) = spec.P(i, j) * oracle::poisson(k - 1, lambda);
    }
  const auto kern = validate_kernel(q, 1e-12);
  const auto fh = first_hitting(renewal_u(kern));
  std::vector<double> out(3, 0.0);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k <= length; ++k) out[j] += std::pow(static_cast<double>(k), power) * fh.g(k, j, j);
  return out;
}

}  // namespace

TEST_CASE("renewal density u") {
  const auto& q = example_kernel(8);
  const MatrixSeq u = renewal_u(q);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(u(0, i, j) == (i == j ? 1.0 : 0.0));
  CHECK(oracle::max_abs_diff(make_identity(u.grid(), 3) + oracle::convolve(q.seq, u), u) <= 1e-9);
  CHECK(oracle::max_abs_diff(u, oracle::neumann(q.seq)) <= 1e-10);
  for (double x : u.data()) CHECK(x >= -1e-12);

  const auto r = random_kernel(Grid({5, 4, 3}), 2, 41);
  CHECK(oracle::max_abs_diff(renewal_u(r), oracle::neumann(r.seq)) <= 1e-10);
  for (auto m : {InverseMethod::series, InverseMethod::recurrence, InverseMethod::newton})
    CHECK(oracle::max_abs_diff(renewal_u(r, m), renewal_u(r)) <= 1e-10);
}

TEST_CASE("Markov renewal equation") {
  const auto& q = example_kernel(12);
  const MatrixSeq u = renewal_u(q);
  const Grid& g = q.grid();
  CHECK(oracle::max_abs_diff(solve_mre({make_identity(g, 3), q}), u) <= 1e-12);
  std::mt19937_64 rng(42);
  const MatrixSeq G = oracle::random_seq(g, 3, rng);
  const MatrixSeq L = solve_mre({G, q}, u);
  CHECK(oracle::max_abs_diff(L - oracle::convolve(q.seq, L), G) <= 1e-9);
  const auto sd = sojourn_distributions(q);
  CHECK(oracle::max_abs_diff(solve_mre({sd.H_tilde, q}, u), smc_transition(q, u)) <= 1e-12);
  CHECK_THROWS_AS(solve_mre({MatrixSeq(Grid({3, 3}), 3), q}, u), DimensionError);
}

TEST_CASE("Markov renewal function") {
  const auto& q = example_kernel(16);
  const MatrixSeq U = markov_renewal_function(renewal_u(q));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(U(0, i, j) == (i == j ? 1.0 : 0.0));
  const Grid& g = q.grid();
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    const auto k = g.unflatten(p);
    for (std::size_t ax = 0; ax < 2; ++ax) {
      if (k[ax] == 0) continue;
      auto prev = k;
      --prev[ax];
      const std::size_t pp = g.flat(prev);
      for (std::size_t x = 0; x < 9; ++x) CHECK(U.matrix(p)[x] >= U.matrix(pp)[x] - 1e-12);
    }
  }
}

TEST_CASE("semi-Markov transition function") {
  const auto& q = example_kernel(24);
  const MatrixSeq P = smc_transition(q, renewal_u(q));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(P(0, i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-15));
  double worst = 0.0, lowest = 0.0;
  for (std::size_t p = 0; p < P.point_count(); ++p)
    for (std::size_t i = 0; i < 3; ++i) {
      worst = std::max(worst, std::abs(P(p, i, 0) + P(p, i, 1) + P(p, i, 2) - 1.0));
      for (std::size_t j = 0; j < 3; ++j) lowest = std::min(lowest, P(p, i, j));
    }
  CHECK(worst <= 1e-8);
  CHECK(lowest >= -1e-10);
}

TEST_CASE("first hitting laws") {
  SUBCASE("example kernel at [10,10]: both routes and the oracle agree") {
    const auto& q = example_kernel(10);
    const auto fh = first_hitting(renewal_u(q));
    for (double x : fh.g.matrix(0)) CHECK(x == 0.0);
    const MatrixSeq ref = hitting_fixed_point(q.seq);
    CHECK(oracle::max_abs_diff(fh.g, ref) <= 1e-9);
    CHECK(oracle::max_abs_diff(first_hitting_recursive(q), ref) <= 1e-12);
    CHECK(oracle::max_abs_diff(fh.G, cumulative_sum(fh.g)) <= 1e-15);
  }
  SUBCASE("random kernels in d=1 and d=3") {
    for (const auto& grid : {Grid({30}), Grid({3, 4, 2})}) {
      const auto r = random_kernel(grid, 3, 43);
      const auto fh = first_hitting(renewal_u(r));
      CHECK(oracle::max_abs_diff(fh.g, first_hitting_recursive(r)) <= 1e-9);
      CHECK(oracle::max_abs_diff(fh.g, hitting_fixed_point(r.seq)) <= 1e-9);
    }
  }
  SUBCASE("G is a sub-distribution function") {
    const auto& q = example_kernel(24);
    const auto fh = first_hitting(renewal_u(q));
    for (double x : fh.G.data()) CHECK(x <= 1.0 + 1e-9);
    for (double x : fh.g.data()) CHECK(x >= -1e-10);
  }
}

TEST_CASE("kernel recovery") {
  SUBCASE("example kernel at [24,24]") {
    const auto& q = example_kernel(24);
    const MatrixSeq u = renewal_u(q);
    const auto fh = first_hitting(u);
    CHECK(oracle::max_abs_diff(recover_kernel(fh.g, u), q.seq) <= 1e-8);
  }
  SUBCASE("g = 0 and u = I give q = 0") {
    const Grid g({5, 5});
    const MatrixSeq q = recover_kernel(MatrixSeq(g, 2), make_identity(g, 2));
    CHECK(oracle::max_abs(q) == 0.0);
  }
  SUBCASE("random d=1 kernel") {
    const auto r = random_kernel(Grid({200}), 4, 44);
    const MatrixSeq u = renewal_u(r);
    CHECK(oracle::max_abs_diff(recover_kernel(first_hitting(u).g, u), r.seq) <= 1e-8);
  }
}

TEST_CASE("sojourn moments") {
  const auto spec = oracle::example_spec();
  const auto& q = example_kernel(40);
  const SojournMoments grid = sojourn_moments(q);
  const SojournMoments closed = sojourn_moments(spec);
  const double m1[] = {6, 6, 8}, m2[] = {5, 5, 7}, m11[] = {41, 41, 71}, m22[] = {29, 29, 55}, c12[] = {3, 2, 3};
  for (std::size_t i = 0; i < 3; ++i) {
    for (const SojournMoments* m : {&grid, &closed}) {
      CHECK(std::abs(m->m[i][0] - m1[i]) <= 1e-6);
      CHECK(std::abs(m->m[i][1] - m2[i]) <= 1e-6);
      CHECK(std::abs(m->mm[i][0][0] - m11[i]) <= 1e-6);
      CHECK(std::abs(m->mm[i][1][1] - m22[i]) <= 1e-6);
      CHECK(std::abs(m->c[i][0][1] - c12[i]) <= 1e-6);
      CHECK(std::abs(m->mm[i][0][1] - (spec.gamma[i] + m1[i] * m2[i])) <= 1e-6);
    }
    for (std::size_t j = 0; j < 3; ++j)
      if (spec.P(i, j) > 0) {
        CHECK(std::abs(grid.m_pair[i][j][0] - m1[i]) <= 1e-6);
        CHECK(std::abs(grid.m_pair[i][j][1] - m2[i]) <= 1e-6);
      }
  }
  CHECK(std::abs(grid.mm[0][0][1] - 33.0) <= 1e-6);
  const auto via_kernel = product_moment_via_kernel(q, 0, 1);
  const double m12[] = {33, 32, 59};
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(via_kernel[i] - m12[i]) <= 1e-6);
  CHECK_THROWS_AS(product_moment_via_kernel(q, 0, 2), ArgumentError);
}

TEST_CASE("stationary distribution") {
  const auto spec = oracle::example_spec();
  const Eigen::VectorXd nu = stationary_distribution(spec.P);
  CHECK(std::abs(nu(0) - 24.0 / 67.0) <= 1e-12);
  CHECK(std::abs(nu(1) - 15.0 / 67.0) <= 1e-12);
  CHECK(std::abs(nu(2) - 28.0 / 67.0) <= 1e-12);
  CHECK((nu.transpose() * spec.P - nu.transpose()).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK_THROWS_AS(stationary_distribution(Eigen::MatrixXd::Identity(3, 3)), NotIrreducibleError);
  Eigen::MatrixXd absorbing(2, 2);
  absorbing << 0.5, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(stationary_distribution(absorbing), NotIrreducibleError);

  const double a = 0.3, b = 0.8;
  Eigen::MatrixXd two(2, 2);
  two << 1 - a, a, b, 1 - b;
  const Eigen::VectorXd nu2 = stationary_distribution(two);
  CHECK(std::abs(nu2(0) - b / (a + b)) <= 1e-14);
  CHECK(std::abs(nu2(1) - a / (a + b)) <= 1e-14);
}

TEST_CASE("first-passage means") {
  const auto spec = oracle::example_spec();
  const SojournMoments mom = sojourn_moments(spec);
  const auto mu = first_passage_means(spec.P, mom);
  const double mu1[] = {19.083, 30.533, 16.357}, mu2[] = {16.292, 26.067, 13.964};
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(mu[0](j, j) - mu1[j]) <= 5e-3);
    CHECK(std::abs(mu[1](j, j) - mu2[j]) <= 5e-3);
  }
  // diagonal equals the ergodic formula mbar / nu_j
  const auto rec = recurrence_cross_moments(spec.P, stationary_distribution(spec.P), mom);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(mu[u](j, j) - rec.mu_diag_ergodic[u](j)) <= 1e-10);

  // single state: the passage time is one sojourn
  SojournMoments one;
  one.s = 1;
  one.d = 2;
  one.m = {{4.5, 7.25}};
  const auto mu_one = first_passage_means(Eigen::MatrixXd::Ones(1, 1), one);
  CHECK(mu_one[0](0, 0) == 4.5);
  CHECK(mu_one[1](0, 0) == 7.25);
}

TEST_CASE("recurrence second moments") {
  const auto spec = oracle::example_spec();
  const auto rec =
      recurrence_cross_moments(spec.P, stationary_distribution(spec.P), sojourn_moments(spec));
  const double mu11[] = {450.042, 1361.267, 299.291}, mu12[] = {378.188, 1153.600, 249.867},
               cov[] = {67.288, 357.698, 21.452};
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(rec.mu2[0][0](j) - mu11[j]) <= 5e-2);
    CHECK(std::abs(rec.mu2[0][1](j) - mu12[j]) <= 5e-2);
    CHECK(std::abs(rec.covariance[0][1](j) - cov[j]) <= 5e-2);
    for (std::size_t u = 0; u < 2; ++u)
      for (std::size_t v = 0; v < 2; ++v) {
        CHECK(std::abs(rec.mu2[u][v](j) - rec.mu2_system[u][v](j)) <= 1e-9 * rec.mu2[u][v](j));
        CHECK(rec.mu2[u][v](j) == doctest::Approx(rec.mu2[v][u](j)).epsilon(1e-14));
      }
    CHECK(std::abs(rec.correlation[0][1](j)) <= 1.0);
  }
  // per-axis second moments from the one-dimensional marginal chains
  for (std::size_t u = 0; u < 2; ++u) {
    const auto first = marginal_recurrence_moment(u, 1500, 1);
    const auto second = marginal_recurrence_moment(u, 1500, 2);
    for (std::size_t j = 0; j < 3; ++j) {
      CAPTURE(u);
      CAPTURE(j);
      CHECK(std::abs(first[j] - rec.mu[u](j, j)) <= 1e-6);
      CHECK(std::abs(second[j] - rec.mu2[u][u](j)) <= 1e-4);
    }
  }
}

TEST_CASE("full analysis") {
  const auto spec = oracle::example_spec();
  const auto& q = example_kernel(20);
  AnalysisOptions opts;
  opts.parametric = spec;
  const MrcAnalysis a = analyze(q, opts);
  CHECK(a.ergodic);
  CHECK(a.warning.empty());
  CHECK(std::abs(a.nu(0) - 24.0 / 67.0) <= 1e-12);
  CHECK(std::abs(a.recurrence.mu[0](0, 0) - 19.083) <= 5e-3);
  CHECK(oracle::max_abs_diff(a.U, cumulative_sum(a.u)) <= 1e-15);

  SUBCASE("reducible chain keeps the sequences and skips ergodic moments") {
    MatrixSeq r(Grid({4}), 2);
    r(1, 0, 0) = 0.5;
    r(2, 0, 0) = 0.5;
    r(3, 1, 1) = 1.0;
    const MrcAnalysis b = analyze(validate_kernel(r, 0.0));
    CHECK_FALSE(b.ergodic);
    CHECK(b.warning.find("not irreducible") != std::string::npos);
    CHECK(b.u.point_count() == 5);
    CHECK(b.recurrence.mu.empty());
  }
  SUBCASE("single state") {
    MatrixSeq r(Grid({5}), 1);
    r(2, 0, 0) = 0.25;
    r(5, 0, 0) = 0.75;
    const MrcAnalysis b = analyze(validate_kernel(r, 0.0));
    CHECK(b.ergodic);
    CHECK(b.recurrence.mu[0](0, 0) == doctest::Approx(0.25 * 2 + 0.75 * 5));
  }
}
