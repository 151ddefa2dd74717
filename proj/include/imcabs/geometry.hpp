#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "imcabs/interval.hpp"

namespace imcabs {

/// Axis-aligned closed hyperrectangle.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> sides);
  Box(std::initializer_list<Interval> sides) : Box(std::vector<Interval>(sides)) {}
  static Box from_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

  std::size_t dim() const { return sides_.size(); }
  const Interval& operator[](std::size_t i) const { return sides_[i]; }
  Interval& operator[](std::size_t i) { return sides_[i]; }
  std::span<const Interval> sides() const { return sides_; }

  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  Eigen::VectorXd center() const;
  double volume() const;
  bool is_bounded() const;
  bool contains_point(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<Interval> sides_;
};

std::ostream& operator<<(std::ostream& os, const Box& b);

/// Closed inclusion, component by component.
bool box_contains(const Box& outer, const Box& inner);

/// Closed overlap: touching boundaries count as intersecting.
bool box_intersects(const Box& a, const Box& b);

/// Overlap with positive measure in every component.
bool box_interiors_intersect(const Box& a, const Box& b);

Box box_hull(const Box& a, const Box& b);

/// Per-dimension cell counts of a uniform grid, row-major with dimension 0 slowest.
struct GridShape {
  std::vector<std::size_t> resolution;

  std::size_t cell_count() const;
  std::vector<std::size_t> unravel(std::size_t flat) const;
  std::size_t ravel(std::span<const std::size_t> index) const;
};

/// Q_X plus the index reserved for the unsafe state (always cells().size()).
class StatePartition {
 public:
  /// Arbitrary externally supplied cells; they are checked to lie in the domain
  /// and to cover its volume.
  StatePartition(Box domain, std::vector<Box> cells);

  const Box& domain() const { return domain_; }
  const std::vector<Box>& cells() const { return cells_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t unsafe_index() const { return cells_.size(); }
  std::size_t state_count() const { return cells_.size() + 1; }

  /// Present only for partitions produced by partition_domain.
  const std::optional<GridShape>& grid() const { return grid_; }
  double cell_width(std::size_t dim) const;

  /// Index range per dimension of grid cells that may touch `region`,
  /// expanded by `pad` cells and clipped to the grid. Requires a grid.
  std::vector<std::pair<std::size_t, std::size_t>> grid_range(const Box& region,
                                                             std::size_t pad) const;

  /// Cell containing x (ties resolved towards the lower index), if x is in the domain.
  std::optional<std::size_t> locate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  friend StatePartition partition_domain(const Box&, std::span<const std::size_t>);
  StatePartition(Box domain, std::vector<Box> cells, GridShape grid);

  Box domain_;
  std::vector<Box> cells_;
  std::optional<GridShape> grid_;
};

/// Uniform grid over `domain`; cells are ordered row-major by dimension index.
StatePartition partition_domain(const Box& domain, std::span<const std::size_t> resolution);

}  // namespace imcabs
