#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mtmrc/kernel.hpp"

namespace mtmrc {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
// Seed of stream `index` under a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;
// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw.
double uniform01(std::mt19937_64& rng) noexcept;

// Inverse-CDF sampler over the flattened (destination, increment) pairs of
// each kernel row, renormalized by the captured mass.
class KernelSampler {
 public:
  explicit KernelSampler(const SemiMarkovKernel& q);

  struct Draw {
    std::size_t state;
    std::size_t point;  // flat grid index of the increment
  };
  Draw draw(std::size_t from, std::mt19937_64& rng) const;

  const Grid& grid() const noexcept { return grid_; }
  std::size_t states() const noexcept { return s_; }
  // Coordinates of grid point `point` (d values).
  const std::size_t* increment(std::size_t point) const noexcept { return coords_.data() + point * grid_.dims(); }

 private:
  Grid grid_;
  std::size_t s_;
  // per row: cumulative weights and the (state, point) they lead to
  std::vector<std::vector<double>> cdf_;
  std::vector<std::vector<std::uint32_t>> state_;
  std::vector<std::vector<std::uint32_t>> point_;
  std::vector<std::size_t> coords_;
};

// One trajectory (J_n, S_n). Jumps continue until every coordinate of S_n
// exceeds the horizon, so both joint and per-axis counts are complete for
// all k <= horizon.
struct PathSample {
  std::vector<std::size_t> states;   // J_0 .. J_N
  std::vector<std::size_t> times;    // S_0 .. S_N, d values each
  std::vector<std::size_t> horizon;
  std::size_t d = 0;

  std::size_t jumps() const noexcept { return states.size() - 1; }
  std::size_t time(std::size_t n, std::size_t axis) const { return times[n * d + axis]; }
};

PathSample sample_path(const KernelSampler& sampler, std::size_t initial, const std::vector<std::size_t>& horizon,
                       std::uint64_t seed);
PathSample sample_path(const SemiMarkovKernel& q, std::size_t initial, const std::vector<std::size_t>& horizon,
                       std::uint64_t seed);

struct Counts {
  std::size_t N = 0;                                   // jumps n >= 1 with S_n <= k
  std::vector<std::size_t> N_axis;                     // [u] jumps with S_n,u <= k_u
  std::vector<std::size_t> visits;                     // [i] n >= 0 with J_n = i, S_n <= k
  std::vector<std::vector<std::size_t>> visits_axis;   // [u][i]
};
Counts counting(const PathSample& path, const std::vector<std::size_t>& k, std::size_t states);

struct EstimateTarget {
  enum class Kind { transition, renewal, hitting_cdf, passage_mean, recurrence_product };
  Kind kind;
  std::size_t i = 0, j = 0;      // 0-based states
  std::vector<std::size_t> at;   // grid point for P, U, G
  std::size_t u = 0, v = 0;      // 0-based axes for the moment targets

  std::string name() const;      // e.g. "P_13", "mu^(1)_11"
  std::string where() const;     // e.g. "(6,6)" or ""
};

struct EstimatorReport {
  std::string quantity;
  std::string at;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;              // uncensored samples used
  double censored_fraction = 0.0;
};

struct EstimateOptions {
  std::size_t paths = 200000;
  std::uint64_t seed = 1;
  // Time-out corner for the passage-time targets. Defaults to 200 per axis;
  // it may lie beyond the kernel grid since the walk only needs increments.
  std::optional<std::vector<std::size_t>> passage_horizon;
};

// Plain Monte Carlo. Target t uses path seeds derive_seed(derive_seed(seed, t), n).
std::vector<EstimatorReport> estimate(const SemiMarkovKernel& q, const std::vector<EstimateTarget>& targets,
                                      const EstimateOptions& options);

// Grammar, 1-based indices: P:i:j:k1,k2  U:i:j:k1,k2  G:i:j:k1,k2  mu:i:j:u  mu2:j:u:v
EstimateTarget parse_target(const std::string& text, std::size_t states, std::size_t dims);

}  // namespace mtmrc
