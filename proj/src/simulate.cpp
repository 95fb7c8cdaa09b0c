#include "mtmrc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtmrc/errors.hpp"
#include "mtmrc/parallel.hpp"

namespace mtmrc {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double uniform01(std::mt19937_64& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

KernelSampler::KernelSampler(const SemiMarkovKernel& q) : grid_(q.grid()), s_(q.states()) {
  const std::size_t n = grid_.point_count();
  const std::size_t d = grid_.dims();
  cdf_.resize(s_);
  state_.resize(s_);
  point_.resize(s_);
  for (std::size_t i = 0; i < s_; ++i) {
    double run = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t j = 0; j < s_; ++j) {
        const double w = q.seq(p, i, j);
        if (w <= 0.0) continue;
        run += w;
        cdf_[i].push_back(run);
        state_[i].push_back(static_cast<std::uint32_t>(j));
        point_[i].push_back(static_cast<std::uint32_t>(p));
      }
    if (cdf_[i].empty()) throw NumericalError("state " + std::to_string(i + 1) + " has no outgoing mass");
  }
  coords_.resize(n * d);
  for (std::size_t p = 0; p < n; ++p) {
    const auto k = grid_.unflatten(p);
    std::copy(k.begin(), k.end(), coords_.begin() + static_cast<std::ptrdiff_t>(p * d));
  }
}

KernelSampler::Draw KernelSampler::draw(std::size_t from, std::mt19937_64& rng) const {
  const auto& cdf = cdf_[from];
  const double target = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.end()) --it;
  const auto idx = static_cast<std::size_t>(it - cdf.begin());
  return {state_[from][idx], point_[from][idx]};
}

namespace {

// A walk that stops once every coordinate exceeds `limit`: each jump raises
// at least one coordinate, so instantaneous-free kernels need at most
// sum(limit_u + 1) jumps. The cap only matters for kernels with mass at 0.
std::size_t jump_cap(const std::vector<std::size_t>& limit) {
  std::size_t cap = 1;
  for (auto h : limit) cap += h + 1;
  return std::max<std::size_t>(cap * 64, 1 << 20);
}

bool dominated(const std::size_t* t, const std::vector<std::size_t>& k) {
  for (std::size_t u = 0; u < k.size(); ++u)
    if (t[u] > k[u]) return false;
  return true;
}

}  // namespace

PathSample sample_path(const KernelSampler& sampler, std::size_t initial, const std::vector<std::size_t>& horizon,
                       std::uint64_t seed) {
  const std::size_t d = sampler.grid().dims();
  if (initial >= sampler.states()) throw ArgumentError("initial state out of range");
  if (horizon.size() != d) throw DimensionError("horizon dimension mismatch");
  std::mt19937_64 rng(seed);
  PathSample path;
  path.d = d;
  path.horizon = horizon;
  path.states.push_back(initial);
  path.times.assign(d, 0);
  std::vector<std::size_t> t(d, 0);
  const std::size_t cap = jump_cap(horizon);
  auto all_beyond = [&] {
    for (std::size_t u = 0; u < d; ++u)
      if (t[u] <= horizon[u]) return false;
    return true;
  };
  std::size_t state = initial;
  while (!all_beyond()) {
    if (path.states.size() > cap) throw NumericalError("sample_path: jump cap reached");
    const auto draw = sampler.draw(state, rng);
    const std::size_t* inc = sampler.increment(draw.point);
    for (std::size_t u = 0; u < d; ++u) t[u] += inc[u];
    state = draw.state;
    path.states.push_back(state);
    path.times.insert(path.times.end(), t.begin(), t.end());
  }
  return path;
}

PathSample sample_path(const SemiMarkovKernel& q, std::size_t initial, const std::vector<std::size_t>& horizon,
                       std::uint64_t seed) {
  return sample_path(KernelSampler(q), initial, horizon, seed);
}

Counts counting(const PathSample& path, const std::vector<std::size_t>& k, std::size_t states) {
  const std::size_t d = path.d;
  if (k.size() != d) throw DimensionError("counting: point dimension mismatch");
  for (std::size_t u = 0; u < d; ++u)
    if (k[u] > path.horizon[u]) throw ArgumentError("counting: point lies beyond the path horizon");
  Counts c;
  c.N_axis.assign(d, 0);
  c.visits.assign(states, 0);
  c.visits_axis.assign(d, std::vector<std::size_t>(states, 0));
  for (std::size_t n = 0; n < path.states.size(); ++n) {
    const std::size_t j = path.states[n];
    const std::size_t* t = path.times.data() + n * d;
    const bool joint = dominated(t, k);
    if (joint) {
      if (n > 0) ++c.N;
      ++c.visits[j];
    }
    for (std::size_t u = 0; u < d; ++u)
      if (t[u] <= k[u]) {
        if (n > 0) ++c.N_axis[u];
        ++c.visits_axis[u][j];
      }
  }
  return c;
}

std::string EstimateTarget::name() const {
  const auto one = [](std::size_t x) { return std::to_string(x + 1); };
  switch (kind) {
    case Kind::transition: return "P_" + one(i) + one(j);
    case Kind::renewal: return "U_" + one(i) + one(j);
    case Kind::hitting_cdf: return "G_" + one(i) + one(j);
    case Kind::passage_mean: return "mu^(" + one(u) + ")_" + one(i) + one(j);
    case Kind::recurrence_product: return "mu^(" + one(u) + "," + one(v) + ")_" + one(j) + one(j);
  }
  return "?";
}

std::string EstimateTarget::where() const {
  if (at.empty()) return "";
  std::string s = "(";
  for (std::size_t a = 0; a < at.size(); ++a) s += (a ? "," : "") + std::to_string(at[a]);
  return s + ")";
}

namespace {

struct Outcome {
  double value = 0.0;
  bool censored = false;
};

Outcome run_one(const KernelSampler& sampler, const EstimateTarget& t, const std::vector<std::size_t>& limit,
                std::uint64_t seed) {
  using Kind = EstimateTarget::Kind;
  const std::size_t d = sampler.grid().dims();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> time(d, 0);
  std::size_t state = t.kind == Kind::recurrence_product ? t.j : t.i;
  const std::size_t cap = jump_cap(limit);
  double visits = (t.kind == Kind::renewal && state == t.j) ? 1.0 : 0.0;
  for (std::size_t n = 1; n <= cap; ++n) {
    const auto draw = sampler.draw(state, rng);
    const std::size_t* inc = sampler.increment(draw.point);
    for (std::size_t u = 0; u < d; ++u) time[u] += inc[u];
    const bool inside = dominated(time.data(), limit);
    switch (t.kind) {
      case Kind::transition:
        // Z_k is the state entered at the last jump dominated by k.
        if (!inside) return {state == t.j ? 1.0 : 0.0, false};
        break;
      case Kind::renewal:
        if (!inside) return {visits, false};
        if (draw.state == t.j) visits += 1.0;
        break;
      case Kind::hitting_cdf:
        if (!inside) return {0.0, false};
        if (draw.state == t.j) return {1.0, false};
        break;
      case Kind::passage_mean:
        if (!inside) return {0.0, true};
        if (draw.state == t.j) return {static_cast<double>(time[t.u]), false};
        break;
      case Kind::recurrence_product:
        if (!inside) return {0.0, true};
        if (draw.state == t.j)
          return {static_cast<double>(time[t.u]) * static_cast<double>(time[t.v]), false};
        break;
    }
    state = draw.state;
  }
  throw NumericalError("estimate: jump cap reached");
}

}  // namespace

std::vector<EstimatorReport> estimate(const SemiMarkovKernel& q, const std::vector<EstimateTarget>& targets,
                                      const EstimateOptions& options) {
  using Kind = EstimateTarget::Kind;
  if (options.paths < 100) throw ArgumentError("estimate: at least 100 paths are required");
  const KernelSampler sampler(q);
  const std::size_t d = q.grid().dims();
  const std::size_t s = q.states();
  const std::vector<std::size_t> passage_limit = options.passage_horizon.value_or(std::vector<std::size_t>(d, 200));
  if (passage_limit.size() != d) throw DimensionError("estimate: passage horizon dimension mismatch");

  std::vector<EstimatorReport> reports;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const EstimateTarget& t = targets[ti];
    const bool moment = t.kind == Kind::passage_mean || t.kind == Kind::recurrence_product;
    if (t.i >= s || t.j >= s) throw ArgumentError("estimate: state index out of range in " + t.name());
    if (moment && (t.u >= d || t.v >= d)) throw ArgumentError("estimate: axis out of range in " + t.name());
    if (!moment) {
      if (t.at.size() != d) throw DimensionError("estimate: grid point dimension mismatch in " + t.name());
    }
    const std::vector<std::size_t>& limit = moment ? passage_limit : t.at;
    const std::uint64_t target_seed = derive_seed(options.seed, ti);

    std::vector<Outcome> outcomes(options.paths);
    const std::size_t chunks = std::min<std::size_t>(options.paths, 64);
    parallel_for(chunks, [&](std::size_t c) {
      const std::size_t begin = options.paths * c / chunks;
      const std::size_t end = options.paths * (c + 1) / chunks;
      for (std::size_t n = begin; n < end; ++n) outcomes[n] = run_one(sampler, t, limit, derive_seed(target_seed, n));
    });

    double sum = 0.0, sum_sq = 0.0;
    std::size_t used = 0, censored = 0;
    for (const auto& o : outcomes) {
      if (o.censored) {
        ++censored;
        continue;
      }
      ++used;
      sum += o.value;
      sum_sq += o.value * o.value;
    }
    EstimatorReport r;
    r.quantity = t.name();
    r.at = t.where();
    r.n = used;
    r.censored_fraction = static_cast<double>(censored) / static_cast<double>(options.paths);
    if (used > 0) {
      const double mean = sum / static_cast<double>(used);
      r.estimate = mean;
      if (used > 1) {
        const double var = std::max(0.0, (sum_sq - static_cast<double>(used) * mean * mean) /
                                             static_cast<double>(used - 1));
        r.std_error = std::sqrt(var / static_cast<double>(used));
      }
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

EstimateTarget parse_target(const std::string& text, std::size_t states, std::size_t dims) {
  std::vector<std::string> parts;
  {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
  }
  auto bad = [&](const std::string& why) { return ArgumentError("target '" + text + "': " + why); };
  auto index = [&](const std::string& s, std::size_t limit, const char* what) {
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(s, &pos);
    } catch (const std::exception&) {
      throw bad(std::string("bad ") + what);
    }
    if (pos != s.size() || v < 1 || static_cast<std::size_t>(v) > limit) throw bad(std::string(what) + " out of range");
    return static_cast<std::size_t>(v - 1);
  };
  auto point = [&](const std::string& s) {
    std::vector<std::size_t> k;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t pos = 0;
      long v = -1;
      try {
        v = std::stol(item, &pos);
      } catch (const std::exception&) {
        throw bad("bad grid point");
      }
      if (pos != item.size() || v < 0) throw bad("bad grid point");
      k.push_back(static_cast<std::size_t>(v));
    }
    if (k.size() != dims) throw bad("grid point needs " + std::to_string(dims) + " coordinates");
    return k;
  };
  if (parts.empty()) throw bad("empty");
  const std::string& tag = parts[0];
  EstimateTarget t{};
  if (tag == "P" || tag == "U" || tag == "G") {
    if (parts.size() != 4) throw bad("expected " + tag + ":i:j:k1,...,kd");
    t.kind = tag == "P" ? EstimateTarget::Kind::transition
             : tag == "U" ? EstimateTarget::Kind::renewal
                          : EstimateTarget::Kind::hitting_cdf;
    t.i = index(parts[1], states, "state");
    t.j = index(parts[2], states, "state");
    t.at = point(parts[3]);
  } else if (tag == "mu") {
    if (parts.size() != 4) throw bad("expected mu:i:j:u");
    t.kind = EstimateTarget::Kind::passage_mean;
    t.i = index(parts[1], states, "state");
    t.j = index(parts[2], states, "state");
    t.u = index(parts[3], dims, "axis");
  } else if (tag == "mu2") {
    if (parts.size() != 4) throw bad("expected mu2:j:u:v");
    t.kind = EstimateTarget::Kind::recurrence_product;
    t.j = index(parts[1], states, "state");
    t.i = t.j;
    t.u = index(parts[2], dims, "axis");
    t.v = index(parts[3], dims, "axis");
  } else {
    throw bad("unknown quantity '" + tag + "'");
  }
  return t;
}

}  // namespace mtmrc
