#include "mtmrc/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "mtmrc/convolution.hpp"
#include "mtmrc/errors.hpp"

namespace mtmrc {

MatrixSeq renewal_u(const SemiMarkovKernel& q, InverseMethod method) {
  return invert(make_identity(q.grid(), q.states()) - q.seq, method);
}

MatrixSeq markov_renewal_function(const MatrixSeq& u) { return cumulative_sum(u); }

MatrixSeq smc_transition(const SemiMarkovKernel& q, const MatrixSeq& u) {
  return convolve(u, sojourn_distributions(q).H_tilde);
}

MatrixSeq solve_mre(const MreProblem& problem, const MatrixSeq& u) {
  require_same_shape(problem.G_known, problem.q.seq, "solve_mre");
  return convolve(u, problem.G_known);
}

MatrixSeq solve_mre(const MreProblem& problem) { return solve_mre(problem, renewal_u(problem.q)); }

FirstHitting first_hitting(const MatrixSeq& u) {
  const std::size_t s = u.states();
  std::vector<RealSeq> diag_inv;
  diag_inv.reserve(s);
  for (std::size_t j = 0; j < s; ++j) diag_inv.push_back(inverse_newton(u.entry(j, j)));
  MatrixSeq g = convolve(u - make_identity(u.grid(), s), make_diag(diag_inv));
  MatrixSeq G = cumulative_sum(g);
  return {std::move(g), std::move(G)};
}

MatrixSeq first_hitting_recursive(const SemiMarkovKernel& q) {
  const Grid& grid = q.grid();
  const std::size_t s = q.states();
  const std::size_t d = grid.dims();
  const auto strides = grid.strides();
  MatrixSeq g(grid, s);
  std::vector<std::size_t> k(d, 0), l(d, 0);
  std::vector<double> acc(s);
  for (std::size_t j = 0; j < s; ++j) {
    std::fill(k.begin(), k.end(), 0);
    for (std::size_t kf = 0; kf < grid.point_count(); ++kf) {
      // acc = q_.j(k) + sum over 0 < l <= k of q(l) with column j removed, times g_.j(k - l)
      for (std::size_t i = 0; i < s; ++i) acc[i] = q.seq(kf, i, j);
      std::fill(l.begin(), l.end(), 0);
      std::size_t lf = 0;
      while (true) {
        if (lf != 0) {
          for (std::size_t i = 0; i < s; ++i) {
            double sum = 0.0;
            for (std::size_t r = 0; r < s; ++r)
              if (r != j) sum += q.seq(lf, i, r) * g(kf - lf, r, j);
            acc[i] += sum;
          }
        }
        std::size_t ax = d;
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
      for (std::size_t i = 0; i < s; ++i) g(kf, i, j) = acc[i];
      for (std::size_t ax = d; ax-- > 0;) {
        if (k[ax] < grid.bound(ax)) {
          ++k[ax];
          break;
        }
        k[ax] = 0;
      }
    }
  }
  return g;
}

MatrixSeq recover_kernel(const MatrixSeq& g, const MatrixSeq& u, InverseMethod method) {
  require_same_shape(g, u, "recover_kernel");
  const std::size_t s = u.states();
  std::vector<RealSeq> diag;
  diag.reserve(s);
  for (std::size_t j = 0; j < s; ++j) diag.push_back(u.entry(j, j));
  const MatrixSeq id = make_identity(u.grid(), s);
  return id - invert(id + convolve(g, make_diag(diag)), method);
}

namespace {

SojournMoments empty_moments(std::size_t s, std::size_t d) {
  SojournMoments m;
  m.s = s;
  m.d = d;
  m.m.assign(s, std::vector<double>(d, 0.0));
  m.mm.assign(s, std::vector<std::vector<double>>(d, std::vector<double>(d, 0.0)));
  m.c = m.mm;
  m.m_pair.assign(s, std::vector<std::vector<double>>(s, std::vector<double>(d, 0.0)));
  return m;
}

void fill_covariances(SojournMoments& m) {
  for (std::size_t i = 0; i < m.s; ++i)
    for (std::size_t u = 0; u < m.d; ++u)
      for (std::size_t v = 0; v < m.d; ++v) m.c[i][u][v] = m.mm[i][u][v] - m.m[i][u] * m.m[i][v];
}

}  // namespace

SojournMoments sojourn_moments(const SemiMarkovKernel& q) {
  const Grid& grid = q.grid();
  const std::size_t s = q.states();
  const std::size_t d = grid.dims();
  SojournMoments out = empty_moments(s, d);
  std::vector<std::vector<double>> pair_mass(s, std::vector<double>(s, 0.0));
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    const auto k = grid.unflatten(p);
    for (std::size_t i = 0; i < s; ++i) {
      double h = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        const double w = q.seq(p, i, j);
        h += w;
        pair_mass[i][j] += w;
        for (std::size_t u = 0; u < d; ++u) out.m_pair[i][j][u] += static_cast<double>(k[u]) * w;
      }
      for (std::size_t u = 0; u < d; ++u) {
        out.m[i][u] += static_cast<double>(k[u]) * h;
        for (std::size_t v = 0; v < d; ++v)
          out.mm[i][u][v] += static_cast<double>(k[u]) * static_cast<double>(k[v]) * h;
      }
    }
  }
  for (std::size_t i = 0; i < s; ++i) {
    const double mass = q.row_mass[i];
    for (std::size_t u = 0; u < d; ++u) {
      out.m[i][u] /= mass;
      for (std::size_t v = 0; v < d; ++v) out.mm[i][u][v] /= mass;
    }
    for (std::size_t j = 0; j < s; ++j)
      for (std::size_t u = 0; u < d; ++u)
        out.m_pair[i][j][u] = pair_mass[i][j] > 0.0 ? out.m_pair[i][j][u] / pair_mass[i][j] : 0.0;
  }
  fill_covariances(out);
  return out;
}

SojournMoments sojourn_moments(const ParametricKernelSpec& spec) {
  spec.check();
  const std::size_t s = spec.states();
  SojournMoments out = empty_moments(s, 2);
  for (std::size_t i = 0; i < s; ++i) {
    const double a = spec.alpha[i], b = spec.beta[i], g = spec.gamma[i];
    const double m1 = a + g + 1.0;
    const double m2 = b + g + 1.0;
    out.m[i] = {m1, m2};
    out.mm[i][0][0] = a + g + m1 * m1;
    out.mm[i][1][1] = b + g + m2 * m2;
    out.mm[i][0][1] = out.mm[i][1][0] = g + m1 * m2;
    for (std::size_t j = 0; j < s; ++j)
      if (spec.P(i, j) > 0.0) out.m_pair[i][j] = {m1, m2};
  }
  fill_covariances(out);
  return out;
}

std::vector<double> product_moment_via_kernel(const SemiMarkovKernel& q, std::size_t u, std::size_t v) {
  if (u >= q.grid().dims() || v >= q.grid().dims()) throw ArgumentError("product moment: axis out of range");
  SemiMarkovKernel qy = phi_kernel(q, phi::product(u, v));
  const std::size_t s = q.states();
  // Work with the row-normalized kernel so that survival tails start at 1.
  for (std::size_t p = 0; p < qy.seq.point_count(); ++p)
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) qy.seq(p, i, j) /= q.row_mass[i];
  std::fill(qy.row_mass.begin(), qy.row_mass.end(), 1.0);
  const MatrixSeq qbar = survival_kernel(qy);
  std::vector<double> out(s, 0.0);
  for (std::size_t p = 0; p < qbar.point_count(); ++p)
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) out[i] += qbar(p, i, j);
  return out;
}

void require_irreducible(const Eigen::MatrixXd& p) {
  const auto s = static_cast<std::size_t>(p.rows());
  auto reach = [&](bool forward) {
    std::vector<char> seen(s, 0);
    std::queue<std::size_t> todo;
    todo.push(0);
    seen[0] = 1;
    while (!todo.empty()) {
      const std::size_t a = todo.front();
      todo.pop();
      for (std::size_t b = 0; b < s; ++b) {
        const double w = forward ? p(a, b) : p(b, a);
        if (w > 0.0 && !seen[b]) {
          seen[b] = 1;
          todo.push(b);
        }
      }
    }
    for (std::size_t b = 0; b < s; ++b)
      if (!seen[b])
        throw NotIrreducibleError("embedded chain is not irreducible: state " + std::to_string(b + 1) +
                                  (forward ? " is not reachable from state 1" : " cannot reach state 1"));
  };
  reach(true);
  reach(false);
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols() || p.rows() == 0) throw DimensionError("stationary distribution: p must be square");
  require_irreducible(p);
  const Eigen::Index s = p.rows();
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(s, s);
  a.row(s - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s);
  rhs(s - 1) = 1.0;
  Eigen::VectorXd nu = a.partialPivLu().solve(rhs);
  if (!nu.allFinite()) throw NumericalError("stationary distribution: singular system");
  return nu;
}

namespace {

Eigen::MatrixXd passage_matrix(const Eigen::MatrixXd& p, Eigen::Index j) {
  Eigen::MatrixXd m = -p;
  m.col(j).setZero();
  m.diagonal().array() += 1.0;
  return m;
}

Eigen::VectorXd solve_checked(const Eigen::MatrixXd& m, const Eigen::VectorXd& b) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const double det = lu.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-14)
    throw NumericalError("first-passage system is singular");
  Eigen::VectorXd x = lu.solve(b);
  if (!x.allFinite()) throw NumericalError("first-passage system produced non-finite values");
  return x;
}

}  // namespace

std::vector<Eigen::MatrixXd> first_passage_means(const Eigen::MatrixXd& p, const SojournMoments& mom) {
  const Eigen::Index s = p.rows();
  if (static_cast<std::size_t>(s) != mom.s) throw DimensionError("first passage: state count mismatch");
  std::vector<Eigen::MatrixXd> mu(mom.d, Eigen::MatrixXd::Zero(s, s));
  for (Eigen::Index j = 0; j < s; ++j) {
    const Eigen::MatrixXd m = passage_matrix(p, j);
    for (std::size_t u = 0; u < mom.d; ++u) {
      Eigen::VectorXd b(s);
      for (Eigen::Index i = 0; i < s; ++i) b(i) = mom.m[i][u];
      mu[u].col(j) = solve_checked(m, b);
    }
  }
  return mu;
}

RecurrenceMoments recurrence_cross_moments(const Eigen::MatrixXd& p, const Eigen::VectorXd& nu,
                                           const SojournMoments& mom) {
  const Eigen::Index s = p.rows();
  const std::size_t d = mom.d;
  RecurrenceMoments out;
  out.d = d;
  out.mu = first_passage_means(p, mom);
  for (std::size_t u = 0; u < d; ++u) {
    double mbar = 0.0;
    for (Eigen::Index i = 0; i < s; ++i) mbar += nu(i) * mom.m[i][u];
    out.mu_diag_ergodic.push_back((mbar / nu.array()).matrix());
  }
  out.mu2.assign(d, std::vector<Eigen::VectorXd>(d, Eigen::VectorXd::Zero(s)));
  out.mu2_system = out.mu2;
  out.covariance = out.mu2;
  out.correlation = out.mu2;
  for (std::size_t u = 0; u < d; ++u)
    for (std::size_t v = 0; v < d; ++v) {
      double mbar_uv = 0.0;
      for (Eigen::Index i = 0; i < s; ++i) mbar_uv += nu(i) * mom.mm[i][u][v];
      for (Eigen::Index j = 0; j < s; ++j) {
        // cross term of one excursion: sum over first steps i -> r that do not hit j
        auto cross = [&](Eigen::Index i) {
          double t = 0.0;
          for (Eigen::Index r = 0; r < s; ++r) {
            if (r == j) continue;
            t += p(i, r) * (mom.m_pair[i][r][u] * out.mu[v](r, j) + mom.m_pair[i][r][v] * out.mu[u](r, j));
          }
          return t;
        };
        double num = mbar_uv;
        for (Eigen::Index i = 0; i < s; ++i) num += nu(i) * cross(i);
        out.mu2[u][v](j) = num / nu(j);

        Eigen::VectorXd b(s);
        for (Eigen::Index i = 0; i < s; ++i) b(i) = mom.mm[i][u][v] + cross(i);
        out.mu2_system[u][v](j) = solve_checked(passage_matrix(p, j), b)(j);
      }
    }
  for (std::size_t u = 0; u < d; ++u) {
    Eigen::VectorXd mean = out.mu[u].diagonal();
    out.variance.push_back(out.mu2[u][u] - mean.cwiseProduct(mean));
  }
  for (std::size_t u = 0; u < d; ++u)
    for (std::size_t v = 0; v < d; ++v) {
      out.covariance[u][v] = out.mu2[u][v] - out.mu[u].diagonal().cwiseProduct(out.mu[v].diagonal());
      for (Eigen::Index j = 0; j < s; ++j) {
        const double denom = std::sqrt(out.variance[u](j) * out.variance[v](j));
        out.correlation[u][v](j) = denom > 0.0 ? out.covariance[u][v](j) / denom : 0.0;
      }
    }
  return out;
}

MrcAnalysis analyze(const SemiMarkovKernel& q, const AnalysisOptions& options) {
  MatrixSeq u = renewal_u(q, options.method);
  MatrixSeq U = markov_renewal_function(u);
  MatrixSeq P = smc_transition(q, u);
  FirstHitting fh = first_hitting(u);
  MrcAnalysis out{std::move(u), std::move(U), std::move(P), std::move(fh.g), std::move(fh.G),
                  embedded_chain(q), {}, false, {}, {}, {}};
  out.moments = options.parametric ? sojourn_moments(*options.parametric) : sojourn_moments(q);
  try {
    out.nu = stationary_distribution(out.p);
    out.recurrence = recurrence_cross_moments(out.p, out.nu, out.moments);
    out.ergodic = true;
  } catch (const NotIrreducibleError& e) {
    out.warning = std::string(e.what()) + "; ergodic moments skipped";
  }
  return out;
}

}  // namespace mtmrc
