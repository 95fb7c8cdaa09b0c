#include "mtmrc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>

#include "mtmrc/convolution.hpp"
#include "mtmrc/errors.hpp"
#include "mtmrc/inversion.hpp"
#include "mtmrc/simulate.hpp"

namespace mtmrc {

BenchSuite parse_bench_suite(const std::string& name) {
  if (name == "conv1d") return BenchSuite::conv1d;
  if (name == "conv2d") return BenchSuite::conv2d;
  if (name == "inv1d") return BenchSuite::inv1d;
  if (name == "inv2d") return BenchSuite::inv2d;
  throw ArgumentError("unknown bench suite '" + name + "' (conv1d, conv2d, inv1d, inv2d)");
}

MatrixSeq random_seq(const Grid& grid, std::size_t s, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  MatrixSeq a(grid, s);
  for (double& x : a.data()) x = lo + (hi - lo) * uniform01(rng);
  return a;
}

MatrixSeq random_invertible(const Grid& grid, std::size_t s, std::uint64_t seed) {
  MatrixSeq q = random_seq(grid, s, seed, 0.0, 1.0);
  for (double& x : q.matrix(0)) x = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    double row = 0.0;
    for (std::size_t p = 0; p < q.point_count(); ++p)
      for (std::size_t j = 0; j < s; ++j) row += q(p, i, j);
    if (row == 0.0) continue;  // single-point grid: q = O and the result is I
    for (std::size_t p = 0; p < q.point_count(); ++p)
      for (std::size_t j = 0; j < s; ++j) q(p, i, j) *= 0.9 / row;
  }
  return make_identity(grid, s) - q;
}

namespace {

struct Entry {
  std::string name;
  std::function<void()> run;
};

BenchGroup time_group(std::string title, std::uint64_t seed, std::size_t reps, const std::vector<Entry>& entries) {
  BenchGroup g{std::move(title), seed, {}};
  for (const auto& e : entries) {
    e.run();  // warm-up: plan creation and first-touch allocation
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < reps; ++r) e.run();
    const auto t1 = std::chrono::steady_clock::now();
    g.results.push_back({e.name, reps, std::chrono::duration<double>(t1 - t0).count(), 0.0});
  }
  double best = g.results.front().elapsed;
  for (const auto& r : g.results) best = std::min(best, r.elapsed);
  for (auto& r : g.results) r.relative = best > 0.0 ? r.elapsed / best : 1.0;
  return g;
}

std::string corner(std::size_t d, std::size_t b) {
  std::string s = "(";
  for (std::size_t a = 0; a < d; ++a) s += (a ? "," : "") + std::to_string(b);
  return s + ")";
}

}  // namespace

std::vector<BenchGroup> run_bench(BenchSuite suite, std::size_t reps, const std::vector<std::size_t>& sizes,
                                  std::uint64_t seed, std::size_t states) {
  if (reps == 0) throw ArgumentError("bench: replications must be positive");
  std::vector<BenchGroup> groups;
  const std::size_t s = states;
  switch (suite) {
    case BenchSuite::conv1d: {
      for (std::size_t len : sizes.empty() ? std::vector<std::size_t>{512} : sizes) {
        if (len == 0) throw ArgumentError("bench: length must be positive");
        const Grid g({len - 1});
        const auto a = std::make_shared<MatrixSeq>(random_seq(g, s, derive_seed(seed, 1)));
        const auto b = std::make_shared<MatrixSeq>(random_seq(g, s, derive_seed(seed, 2)));
        groups.push_back(time_group("1-d convolution, length " + std::to_string(len) + ", s=" + std::to_string(s),
                                    seed, reps,
                                    {{"Direct", [a, b] { convolve_direct(*a, *b); }},
                                     {"FFT", [a, b] { convolve_fft(*a, *b); }}}));
      }
      break;
    }
    case BenchSuite::conv2d: {
      if (sizes.empty()) {
        const Grid small({31, 31}), large({127, 127});
        const auto a = std::make_shared<MatrixSeq>(random_seq(small, s, derive_seed(seed, 1)));
        const auto b = std::make_shared<MatrixSeq>(random_seq(small, s, derive_seed(seed, 2)));
        const auto c = std::make_shared<MatrixSeq>(random_seq(large, s, derive_seed(seed, 3)));
        const auto e = std::make_shared<MatrixSeq>(random_seq(large, s, derive_seed(seed, 4)));
        groups.push_back(time_group("2-d convolution, bounds (31,31), s=" + std::to_string(s), seed, reps,
                                    {{"Direct", [a, b] { convolve_direct(*a, *b); }},
                                     {"FFT", [a, b] { convolve_fft(*a, *b); }}}));
        groups.push_back(time_group("2-d convolution, cross-size, s=" + std::to_string(s), seed, reps,
                                    {{"FFT-up to (127,127)", [c, e] { convolve_fft(*c, *e); }},
                                     {"Direct-up to (31,31)", [a, b] { convolve_direct(*a, *b); }}}));
      } else {
        for (std::size_t n : sizes) {
          const Grid g({n, n});
          const auto a = std::make_shared<MatrixSeq>(random_seq(g, s, derive_seed(seed, 1)));
          const auto b = std::make_shared<MatrixSeq>(random_seq(g, s, derive_seed(seed, 2)));
          groups.push_back(time_group("2-d convolution, bounds " + corner(2, n) + ", s=" + std::to_string(s), seed,
                                      reps,
                                      {{"Direct", [a, b] { convolve_direct(*a, *b); }},
                                       {"FFT", [a, b] { convolve_fft(*a, *b); }}}));
        }
      }
      break;
    }
    case BenchSuite::inv1d:
    case BenchSuite::inv2d: {
      const bool one = suite == BenchSuite::inv1d;
      const std::vector<std::size_t> defaults{one ? std::size_t{512} : std::size_t{32}};
      for (std::size_t n : sizes.empty() ? defaults : sizes) {
        if (one && n == 0) throw ArgumentError("bench: length must be positive");
        const Grid g = one ? Grid({n - 1}) : Grid({n, n});
        const auto a = std::make_shared<MatrixSeq>(random_invertible(g, s, derive_seed(seed, 5)));
        const std::string title = one ? "1-d inversion, length " + std::to_string(n)
                                      : "2-d inversion, bounds " + corner(2, n);
        groups.push_back(time_group(title + ", s=" + std::to_string(s), seed, reps,
                                    {{"Gauss-Jordan", [a] { inverse_gauss_jordan(*a); }},
                                     {"Newton", [a] { inverse_newton(*a); }},
                                     {"Recurrence", [a] { inverse_recurrence(*a); }}}));
      }
      break;
    }
  }
  return groups;
}

std::string format_bench(const std::vector<BenchGroup>& groups) {
  std::ostringstream os;
  for (const auto& g : groups) {
    os << g.title << " (seed " << g.seed << ")\n";
    os << std::left << std::setw(24) << "Test" << std::right << std::setw(14) << "Replications" << std::setw(14)
       << "Elapsed" << std::setw(12) << "Relative" << '\n';
    for (const auto& r : g.results)
      os << std::left << std::setw(24) << r.test << std::right << std::setw(14) << r.replications << std::setw(14)
         << std::fixed << std::setprecision(4) << r.elapsed << std::setw(12) << std::setprecision(3) << r.relative
         << '\n';
    os << '\n';
  }
  return os.str();
}

}  // namespace mtmrc
