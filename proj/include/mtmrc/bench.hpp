#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mtmrc/matrix_seq.hpp"

namespace mtmrc {

struct BenchResult {
  std::string test;
  std::size_t replications = 0;
  double elapsed = 0.0;   // seconds over all replications
  double relative = 0.0;  // elapsed / fastest elapsed in the group
};

struct BenchGroup {
  std::string title;
  std::uint64_t seed = 0;
  std::vector<BenchResult> results;
};

enum class BenchSuite { conv1d, conv2d, inv1d, inv2d };

BenchSuite parse_bench_suite(const std::string& name);

// conv1d/inv1d sizes are sequence lengths; conv2d/inv2d sizes are the grid
// bound per axis. Empty sizes select the defaults: 512 for the 1-d suites,
// 32 for inv2d, and for conv2d the pair 31 (direct) / 127 (FFT) together
// with a same-size comparison at 31. Each entry is run once untimed first.
std::vector<BenchGroup> run_bench(BenchSuite suite, std::size_t reps, const std::vector<std::size_t>& sizes,
                                  std::uint64_t seed, std::size_t states = 3);

// Paper-style table: Test | Replications | Elapsed | Relative.
std::string format_bench(const std::vector<BenchGroup>& groups);

// Random fixtures shared by the bench and the tests.
MatrixSeq random_seq(const Grid& grid, std::size_t s, std::uint64_t seed, double lo = -1.0, double hi = 1.0);
// I - q for a random kernel-like q with q(0) = 0 and row mass 0.9.
MatrixSeq random_invertible(const Grid& grid, std::size_t s, std::uint64_t seed);

}  // namespace mtmrc
