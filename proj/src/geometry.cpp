#include "imcabs/geometry.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "imcabs/errors.hpp"

namespace imcabs {

namespace {

void require_same_dim(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument("box dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  }
}

// Grid coordinate i of n over [lo, hi]; identical for both cells sharing a face.
double grid_coord(const Interval& side, std::size_t i, std::size_t n) {
  if (i == 0) return side.lo;
  if (i == n) return side.hi;
  return side.lo + side.width() * static_cast<double>(i) / static_cast<double>(n);
}

}  // namespace

Box::Box(std::vector<Interval> sides) : sides_(std::move(sides)) {
  if (sides_.empty()) throw InvalidArgument("box must have dimension >= 1");
  for (std::size_t i = 0; i < sides_.size(); ++i) {
    if (sides_[i].is_empty() || std::isnan(sides_[i].lo) || std::isnan(sides_[i].hi)) {
      throw InvalidArgument("box side " + std::to_string(i) + " is empty");
    }
  }
}

Box Box::from_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size()) throw InvalidArgument("box bound vectors differ in size");
  std::vector<Interval> sides;
  for (Eigen::Index i = 0; i < lo.size(); ++i) sides.emplace_back(lo[i], hi[i]);
  return Box(std::move(sides));
}

Eigen::VectorXd Box::lower() const {
  Eigen::VectorXd v(dim());
  for (std::size_t i = 0; i < dim(); ++i) v[i] = sides_[i].lo;
  return v;
}

Eigen::VectorXd Box::upper() const {
  Eigen::VectorXd v(dim());
  for (std::size_t i = 0; i < dim(); ++i) v[i] = sides_[i].hi;
  return v;
}

Eigen::VectorXd Box::center() const { return 0.5 * (lower() + upper()); }

double Box::volume() const {
  double v = 1.0;
  for (const auto& s : sides_) v *= s.width();
  return v;
}

bool Box::is_bounded() const {
  return std::all_of(sides_.begin(), sides_.end(), [](const Interval& s) { return s.is_bounded(); });
}

bool Box::contains_point(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw InvalidArgument("point dimension mismatch");
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!sides_[i].contains(x[static_cast<Eigen::Index>(i)])) return false;
  }
  return true;
}

std::ostream& operator<<(std::ostream& os, const Box& b) {
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i) os << " x ";
    os << b[i];
  }
  return os;
}

bool box_contains(const Box& outer, const Box& inner) {
  require_same_dim(outer, inner);
  for (std::size_t i = 0; i < outer.dim(); ++i) {
    if (!outer[i].contains(inner[i])) return false;
  }
  return true;
}

bool box_intersects(const Box& a, const Box& b) {
  require_same_dim(a, b);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (a[i].hi < b[i].lo || b[i].hi < a[i].lo) return false;
  }
  return true;
}

bool box_interiors_intersect(const Box& a, const Box& b) {
  require_same_dim(a, b);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (a[i].hi <= b[i].lo || b[i].hi <= a[i].lo) return false;
  }
  return true;
}

Box box_hull(const Box& a, const Box& b) {
  require_same_dim(a, b);
  std::vector<Interval> sides(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) sides[i] = hull(a[i], b[i]);
  return Box(std::move(sides));
}

std::size_t GridShape::cell_count() const {
  return std::accumulate(resolution.begin(), resolution.end(), std::size_t{1},
                         std::multiplies<>());
}

std::vector<std::size_t> GridShape::unravel(std::size_t flat) const {
  std::vector<std::size_t> index(resolution.size());
  for (std::size_t d = resolution.size(); d-- > 0;) {
    index[d] = flat % resolution[d];
    flat /= resolution[d];
  }
  return index;
}

std::size_t GridShape::ravel(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < resolution.size(); ++d) flat = flat * resolution[d] + index[d];
  return flat;
}

StatePartition::StatePartition(Box domain, std::vector<Box> cells)
    : domain_(std::move(domain)), cells_(std::move(cells)) {
  if (cells_.empty()) throw InvalidArgument("partition needs at least one cell");
  double covered = 0.0;
  for (const auto& c : cells_) {
    if (!box_contains(domain_, c)) throw InvalidArgument("partition cell lies outside the domain");
    covered += c.volume();
  }
  const double total = domain_.volume();
  if (std::abs(covered - total) > 1e-9 * std::max(1.0, std::abs(total))) {
    throw InvalidArgument("partition cells do not tile the domain volume");
  }
}

StatePartition::StatePartition(Box domain, std::vector<Box> cells, GridShape grid)
    : domain_(std::move(domain)), cells_(std::move(cells)), grid_(std::move(grid)) {}

double StatePartition::cell_width(std::size_t dim) const {
  if (!grid_) throw InvalidArgument("cell width requires a uniform grid partition");
  return domain_[dim].width() / static_cast<double>(grid_->resolution[dim]);
}

std::vector<std::pair<std::size_t, std::size_t>> StatePartition::grid_range(const Box& region,
                                                                           std::size_t pad) const {
  if (!grid_) throw InvalidArgument("grid range requires a uniform grid partition");
  require_same_dim(domain_, region);
  std::vector<std::pair<std::size_t, std::size_t>> range(domain_.dim());
  for (std::size_t d = 0; d < domain_.dim(); ++d) {
    const auto n = static_cast<double>(grid_->resolution[d]);
    const double w = cell_width(d);
    const double lo = std::floor((region[d].lo - domain_[d].lo) / w) - static_cast<double>(pad);
    const double hi = std::floor((region[d].hi - domain_[d].lo) / w) + static_cast<double>(pad);
    const double clo = std::clamp(std::isnan(lo) ? 0.0 : lo, 0.0, n - 1.0);
    const double chi = std::clamp(std::isnan(hi) ? n - 1.0 : hi, 0.0, n - 1.0);
    range[d] = {static_cast<std::size_t>(clo), static_cast<std::size_t>(chi)};
    if (region[d].hi < domain_[d].lo - w * static_cast<double>(pad) ||
        region[d].lo > domain_[d].hi + w * static_cast<double>(pad)) {
      range[d] = {1, 0};  // empty
    }
  }
  return range;
}

std::optional<std::size_t> StatePartition::locate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (!domain_.contains_point(x)) return std::nullopt;
  if (grid_) {
    std::vector<std::size_t> index(domain_.dim());
    for (std::size_t d = 0; d < domain_.dim(); ++d) {
      const std::size_t n = grid_->resolution[d];
      const double xd = x[static_cast<Eigen::Index>(d)];
      auto i = static_cast<std::size_t>(std::clamp(
          std::floor((xd - domain_[d].lo) / cell_width(d)), 0.0, static_cast<double>(n - 1)));
      while (i > 0 && xd < grid_coord(domain_[d], i, n)) --i;
      while (i + 1 < n && xd > grid_coord(domain_[d], i + 1, n)) ++i;
      index[d] = i;
    }
    return grid_->ravel(index);
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i].contains_point(x)) return i;
  }
  return std::nullopt;
}

StatePartition partition_domain(const Box& domain, std::span<const std::size_t> resolution) {
  if (resolution.size() != domain.dim()) {
    throw InvalidArgument("resolution has " + std::to_string(resolution.size()) +
                          " entries for a " + std::to_string(domain.dim()) + "-dimensional domain");
  }
  for (std::size_t d = 0; d < domain.dim(); ++d) {
    if (resolution[d] == 0) throw InvalidArgument("grid resolution must be >= 1");
    if (!(domain[d].width() > 0.0) || !domain[d].is_bounded()) {
      throw InvalidArgument("domain is degenerate or unbounded in dimension " + std::to_string(d));
    }
  }
  GridShape grid{{resolution.begin(), resolution.end()}};
  std::vector<Box> cells;
  cells.reserve(grid.cell_count());
  for (std::size_t flat = 0; flat < grid.cell_count(); ++flat) {
    const auto index = grid.unravel(flat);
    std::vector<Interval> sides(domain.dim());
    for (std::size_t d = 0; d < domain.dim(); ++d) {
      sides[d] = {grid_coord(domain[d], index[d], resolution[d]),
                  grid_coord(domain[d], index[d] + 1, resolution[d])};
    }
    cells.emplace_back(std::move(sides));
  }
  return StatePartition(domain, std::move(cells), std::move(grid));
}

}  // namespace imcabs
