#include "mtmrc/grid.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "mtmrc/errors.hpp"

namespace mtmrc {

const char* to_string(KernelCondition c) noexcept {
  switch (c) {
    case KernelCondition::nonnegative: return "nonnegativity";
    case KernelCondition::row_mass: return "row mass";
    case KernelCondition::origin_mass: return "no mass at origin";
  }
  return "unknown";
}

KernelValidationError::KernelValidationError(KernelCondition condition, std::size_t state,
                                             const std::string& detail)
    : Error("kernel invalid (condition: " + std::string(to_string(condition)) + ", state " +
            std::to_string(state + 1) + "): " + detail),
      condition_(condition),
      state_(state) {}

Grid::Grid(std::vector<std::size_t> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw DimensionError("grid must have at least one dimension");
  strides_.assign(bounds_.size(), 1);
  count_ = 1;
  for (std::size_t a = bounds_.size(); a-- > 0;) {
    strides_[a] = count_;
    const std::size_t ext = bounds_[a] + 1;
    if (ext == 0 || count_ > std::numeric_limits<std::size_t>::max() / ext)
      throw DimensionError("grid point count overflows");
    count_ *= ext;
  }
}

Grid Grid::cube(std::size_t d, std::size_t bound) { return Grid(std::vector<std::size_t>(d, bound)); }

std::size_t Grid::flat(std::span<const std::size_t> index) const {
  if (index.size() != dims()) throw DimensionError("index dimension mismatch");
  std::size_t f = 0;
  for (std::size_t a = 0; a < dims(); ++a) {
    if (index[a] > bounds_[a]) throw ArgumentError("index outside grid");
    f += index[a] * strides_[a];
  }
  return f;
}

std::vector<std::size_t> Grid::unflatten(std::size_t f) const {
  if (f >= count_) throw ArgumentError("flat index outside grid");
  std::vector<std::size_t> idx(dims());
  for (std::size_t a = 0; a < dims(); ++a) {
    idx[a] = f / strides_[a];
    f %= strides_[a];
  }
  return idx;
}

bool Grid::contains(std::span<const std::size_t> index) const {
  if (index.size() != dims()) return false;
  for (std::size_t a = 0; a < dims(); ++a)
    if (index[a] > bounds_[a]) return false;
  return true;
}

bool Grid::dominates(const Grid& other) const {
  if (other.dims() != dims()) return false;
  for (std::size_t a = 0; a < dims(); ++a)
    if (bounds_[a] < other.bounds_[a]) return false;
  return true;
}

std::size_t Grid::max_total_degree() const noexcept {
  return std::accumulate(bounds_.begin(), bounds_.end(), std::size_t{0});
}

std::vector<std::size_t> Grid::total_degrees() const {
  std::vector<std::size_t> deg(count_, 0);
  for (std::size_t a = 0; a < dims(); ++a) {
    const std::size_t ext = bounds_[a] + 1;
    for (std::size_t f = 0; f < count_; ++f) deg[f] += (f / strides_[a]) % ext;
  }
  return deg;
}

Grid min_grid(const Grid& a, const Grid& b) {
  if (a.dims() != b.dims()) throw DimensionError("grid dimension mismatch");
  std::vector<std::size_t> m(a.dims());
  for (std::size_t i = 0; i < a.dims(); ++i) m[i] = std::min(a.bound(i), b.bound(i));
  return Grid(std::move(m));
}

std::vector<std::size_t> box_offsets(const Grid& box, std::span<const std::size_t> strides) {
  if (strides.size() != box.dims()) throw DimensionError("stride dimension mismatch");
  std::vector<std::size_t> out(box.point_count());
  std::vector<std::size_t> idx(box.dims(), 0);
  std::size_t off = 0;
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = off;
    for (std::size_t a = box.dims(); a-- > 0;) {
      if (idx[a] < box.bound(a)) {
        ++idx[a];
        off += strides[a];
        break;
      }
      off -= idx[a] * strides[a];
      idx[a] = 0;
    }
  }
  return out;
}

}  // namespace mtmrc
