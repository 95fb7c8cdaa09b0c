#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mtmrc {

// Rectangular index box {0..bounds[0]} x ... x {0..bounds[d-1]} of N^d.
// Bounds are inclusive upper corners; points are addressed in row-major
// order with the last coordinate varying fastest.
class Grid {
 public:
  explicit Grid(std::vector<std::size_t> bounds);

  static Grid cube(std::size_t d, std::size_t bound);

  std::size_t dims() const noexcept { return bounds_.size(); }
  std::span<const std::size_t> bounds() const noexcept { return bounds_; }
  std::size_t bound(std::size_t axis) const { return bounds_.at(axis); }
  std::size_t extent(std::size_t axis) const { return bounds_.at(axis) + 1; }
  std::size_t point_count() const noexcept { return count_; }
  std::span<const std::size_t> strides() const noexcept { return strides_; }

  std::size_t flat(std::span<const std::size_t> index) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;
  bool contains(std::span<const std::size_t> index) const;

  // Componentwise partial order on the corners.
  bool dominates(const Grid& other) const;
  std::size_t max_total_degree() const noexcept;

  // Total degree k_1 + ... + k_d of every point, in flat order.
  std::vector<std::size_t> total_degrees() const;

  friend bool operator==(const Grid& a, const Grid& b) { return a.bounds_ == b.bounds_; }

 private:
  std::vector<std::size_t> bounds_;
  std::vector<std::size_t> strides_;
  std::size_t count_ = 0;
};

Grid min_grid(const Grid& a, const Grid& b);

// Flat offsets, under `strides`, of every point of `box` in box row-major
// order. Used to address a sub-box of a larger grid.
std::vector<std::size_t> box_offsets(const Grid& box, std::span<const std::size_t> strides);

}  // namespace mtmrc
