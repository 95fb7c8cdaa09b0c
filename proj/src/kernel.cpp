#include "mtmrc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtmrc/errors.hpp"

namespace mtmrc {

void ParametricKernelSpec::check() const {
  const std::size_t s = states();
  if (s == 0 || static_cast<std::size_t>(P.cols()) != s) throw ArgumentError("parametric kernel: P must be square");
  if (alpha.size() != s || beta.size() != s || gamma.size() != s)
    throw ArgumentError("parametric kernel: alpha, beta and gamma need one value per state");
  for (std::size_t i = 0; i < s; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      if (!(P(i, j) >= 0.0)) throw ArgumentError("parametric kernel: P has a negative entry in row " + std::to_string(i + 1));
      sum += P(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ArgumentError("parametric kernel: row " + std::to_string(i + 1) + " of P does not sum to 1");
    if (!(alpha[i] > 0.0) || !(beta[i] > 0.0) || !(gamma[i] >= 0.0))
      throw ArgumentError("parametric kernel: need alpha > 0, beta > 0, gamma >= 0 (state " + std::to_string(i + 1) + ")");
  }
}

SemiMarkovKernel validate_kernel(MatrixSeq seq, double tail_tol, bool allow_instantaneous) {
  const std::size_t s = seq.states();
  if (!(tail_tol >= 0.0)) throw ArgumentError("tail_tol must be nonnegative");
  if (!seq.all_finite()) throw NumericalError("kernel has non-finite entries");
  std::vector<double> mass(s, 0.0);
  for (std::size_t p = 0; p < seq.point_count(); ++p)
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        const double v = seq(p, i, j);
        if (v < -1e-14) {
          const auto idx = seq.grid().unflatten(p);
          std::string at;
          for (auto x : idx) at += (at.empty() ? "" : ",") + std::to_string(x);
          throw KernelValidationError(KernelCondition::nonnegative, i,
                                      "q_" + std::to_string(i + 1) + std::to_string(j + 1) + "(" + at +
                                          ") = " + std::to_string(v));
        }
        if (p == 0 && v != 0.0 && !allow_instantaneous)
          throw KernelValidationError(KernelCondition::origin_mass, i,
                                      "q_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                          " has mass at the origin");
        mass[i] += v;
      }
  for (std::size_t i = 0; i < s; ++i)
    if (mass[i] < 1.0 - tail_tol || mass[i] > 1.0 + 1e-12)
      throw KernelValidationError(KernelCondition::row_mass, i,
                                  "row mass " + std::to_string(mass[i]) + " outside [1 - " +
                                      std::to_string(tail_tol) + ", 1]");
  return SemiMarkovKernel{std::move(seq), std::move(mass), tail_tol, allow_instantaneous};
}

double bpoisson_pmf(std::size_t x1, std::size_t x2, double alpha, double beta, double gamma) {
  const double a = static_cast<double>(x1);
  const double b = static_cast<double>(x2);
  const double log_prefix = -(alpha + beta + gamma) + a * std::log(alpha) - std::lgamma(a + 1.0) +
                            b * std::log(beta) - std::lgamma(b + 1.0);
  // sum_k C(x1,k) C(x2,k) k! r^k with t_{k+1} / t_k = (x1-k)(x2-k) r / (k+1)
  const double r = gamma / (alpha * beta);
  double term = 1.0;
  double sum = 1.0;
  const std::size_t kmax = std::min(x1, x2);
  for (std::size_t k = 0; k < kmax; ++k) {
    term *= static_cast<double>(x1 - k) * static_cast<double>(x2 - k) / static_cast<double>(k + 1) * r;
    sum += term;
  }
  return std::exp(log_prefix) * sum;
}

SemiMarkovKernel build_bpoisson_kernel(const ParametricKernelSpec& spec, const Grid& grid, double tail_tol) {
  if (grid.dims() != 2) throw ArgumentError("the bivariate Poisson kernel needs a 2-dimensional grid");
  spec.check();
  const std::size_t s = spec.states();
  MatrixSeq q(grid, s);
  for (std::size_t k1 = 1; k1 <= grid.bound(0); ++k1)
    for (std::size_t k2 = 1; k2 <= grid.bound(1); ++k2) {
      const std::size_t p = k1 * grid.strides()[0] + k2;
      for (std::size_t i = 0; i < s; ++i) {
        const double f = bpoisson_pmf(k1 - 1, k2 - 1, spec.alpha[i], spec.beta[i], spec.gamma[i]);
        for (std::size_t j = 0; j < s; ++j) q(p, i, j) = spec.P(i, j) * f;
      }
    }
  return validate_kernel(std::move(q), tail_tol);
}

MatrixSeq cumulated_kernel(const SemiMarkovKernel& q) { return cumulative_sum(q.seq); }

namespace {

// out(k) = sum over S of (-1)^|S| C(k_S, bound elsewhere) with the empty-set
// term replaced by `full`, for every matrix entry.
MatrixSeq inclusion_exclusion(const MatrixSeq& cum, const std::vector<double>& full) {
  const Grid& g = cum.grid();
  const std::size_t d = g.dims();
  const std::size_t blk = cum.block();
  MatrixSeq out(g, cum.states());
  std::vector<std::size_t> kappa(d);
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    const auto k = g.unflatten(p);
    auto dst = out.matrix(p);
    std::copy(full.begin(), full.end(), dst.begin());
    for (std::size_t mask = 1; mask < (std::size_t{1} << d); ++mask) {
      int sign = 1;
      for (std::size_t u = 0; u < d; ++u) {
        const bool in = (mask >> u) & 1;
        kappa[u] = in ? k[u] : g.bound(u);
        if (in) sign = -sign;
      }
      const auto src = cum.matrix(g.flat(kappa));
      for (std::size_t e = 0; e < blk; ++e) dst[e] += sign * src[e];
    }
  }
  return out;
}

}  // namespace

MatrixSeq survival_kernel(const SemiMarkovKernel& q) {
  const Eigen::MatrixXd p = embedded_chain(q);
  const std::size_t s = q.states();
  std::vector<double> full(s * s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) full[i * s + j] = p(i, j);
  return inclusion_exclusion(cumulated_kernel(q), full);
}

SojournDistributions sojourn_distributions(const SemiMarkovKernel& q) {
  const std::size_t s = q.states();
  const Grid& g = q.grid();
  MatrixSeq h(g, s);
  for (std::size_t p = 0; p < g.point_count(); ++p)
    for (std::size_t i = 0; i < s; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < s; ++j) sum += q.seq(p, i, j);
      h(p, i, i) = sum;
    }
  MatrixSeq H = cumulative_sum(h);
  MatrixSeq H_tilde = make_ones_diag(g, s) - H;
  std::vector<double> full(s * s, 0.0);
  for (std::size_t i = 0; i < s; ++i) full[i * s + i] = 1.0;
  MatrixSeq H_bar = inclusion_exclusion(H, full);
  return {std::move(h), std::move(H), std::move(H_tilde), std::move(H_bar)};
}

Eigen::MatrixXd embedded_chain(const SemiMarkovKernel& q) {
  const std::size_t s = q.states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(s, s);
  for (std::size_t pt = 0; pt < q.seq.point_count(); ++pt)
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) p(i, j) += q.seq(pt, i, j);
  for (std::size_t i = 0; i < s; ++i) {
    const double mass = p.row(i).sum();
    if (!(mass > 0.0)) throw NumericalError("state " + std::to_string(i + 1) + " has no outgoing mass");
    p.row(i) /= mass;
  }
  return p;
}

namespace phi {

PhiMap projection(std::size_t axis) {
  return [axis](std::span<const std::size_t> k) { return k[axis]; };
}

PhiMap product(std::size_t u, std::size_t v) {
  return [u, v](std::span<const std::size_t> k) { return k[u] * k[v]; };
}

PhiMap total() {
  return [](std::span<const std::size_t> k) {
    std::size_t t = 0;
    for (auto x : k) t += x;
    return t;
  };
}

}  // namespace phi

SemiMarkovKernel phi_kernel(const SemiMarkovKernel& q, const PhiMap& map) {
  const Grid& g = q.grid();
  const std::size_t s = q.states();
  const std::size_t blk = s * s;
  std::vector<std::size_t> image(g.point_count());
  std::size_t top = 0;
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    image[p] = map(g.unflatten(p));
    top = std::max(top, image[p]);
  }
  MatrixSeq out(Grid({top}), s);
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    auto src = q.seq.matrix(p);
    auto dst = out.matrix(image[p]);
    for (std::size_t e = 0; e < blk; ++e) dst[e] += src[e];
  }
  return SemiMarkovKernel{std::move(out), q.row_mass, q.tail_tol, true};
}

SemiMarkovKernel marginal_kernel(const SemiMarkovKernel& q, std::size_t axis) {
  if (axis >= q.grid().dims())
    throw ArgumentError("marginal_kernel: dimension " + std::to_string(axis + 1) + " out of range");
  return phi_kernel(q, phi::projection(axis));
}

}  // namespace mtmrc
