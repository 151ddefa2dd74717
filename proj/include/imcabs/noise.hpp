#pragma once

#include <array>
#include <span>
#include <variant>
#include <vector>

#include "imcabs/geometry.hpp"
#include "imcabs/interval.hpp"

namespace imcabs {

class NoiseComponent;

/// Uniform on [lo, hi]; lo == hi is a point mass.
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

/// Gaussian N(mean, stddev^2) conditioned on [lo, hi]; either end may be infinite.
struct TruncatedGaussian {
  double mean = 0.0;
  double stddev = 1.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Finite mixture; weights are positive and sum to 1.
struct Mixture {
  std::vector<double> weights;
  std::vector<NoiseComponent> components;
};

/// One scalar noise distribution with an exact CDF.
class NoiseComponent {
 public:
  using Variant = std::variant<Uniform, TruncatedGaussian, Mixture>;

  NoiseComponent(Uniform u);            // NOLINT: implicit by design of the variant
  NoiseComponent(TruncatedGaussian g);  // NOLINT
  NoiseComponent(Mixture m);            // NOLINT

  const Variant& variant() const { return v_; }

  /// Interval hull of the support.
  Interval support() const;

 private:
  Variant v_;
  // Cached normalisation of a truncated Gaussian: Phi(lo), Phi(hi) and their complements.
  double phi_lo_ = 0.0, phi_hi_ = 1.0, q_lo_ = 1.0, q_hi_ = 0.0;
  friend double cdf(const NoiseComponent&, double);
};

/// Independent per-component noise, one entry per state dimension.
class NoiseModel {
 public:
  explicit NoiseModel(std::vector<NoiseComponent> components);

  std::size_t dim() const { return components_.size(); }
  const NoiseComponent& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<NoiseComponent>& components() const { return components_; }
  /// Hull of the support, W. May be unbounded.
  Box support() const;

 private:
  std::vector<NoiseComponent> components_;
};

/// Pr(w <= t).
double cdf(const NoiseComponent& c, double t);

/// Pr(w < t); differs from cdf only at atoms.
double cdf_left(const NoiseComponent& c, double t);

/// Pr(w in [lo, hi]) for a closed interval; 0 for an empty one.
double interval_probability(const NoiseComponent& c, const Interval& i);

/// Pr(c) for a product cell; ends may be infinite.
double cell_probability(const NoiseModel& noise, std::span<const Interval> cell);
inline double cell_probability(const NoiseModel& noise, const Box& cell) {
  return cell_probability(noise, cell.sides());
}

/// Inverse CDF. Mixtures pick a component from the weight slice containing u
/// and invert that component on the rescaled draw.
double quantile(const NoiseComponent& c, double u);

struct NoiseCell {
  Box bounds;
  double probability = 0.0;
};

/// Cut points of the three-interval partitions of one noise component.
/// Upper-bound cells: (-inf, eps1], [eps1, eps2], [eps2, inf).
/// Lower-bound cells: (-inf, eps3], [eps3, eps4], [eps4, inf).
struct PartitionPair {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps3 = 0.0;
  double eps4 = 0.0;
  bool lower_empty = false;

  std::array<Interval, 3> upper_cells() const;
  std::array<Interval, 3> lower_cells() const;
  /// Middle cells: the only ones whose posterior can meet (upper) or fit inside (lower) the target.
  Interval upper_cell() const { return {eps1, eps2}; }
  Interval lower_cell() const { return lower_empty ? Interval::empty() : Interval{eps3, eps4}; }
};

/// Additive noise: posterior_f component [C, D], target component [A, B].
PartitionPair optimal_partition_affine(const Interval& postf, const Interval& target);

/// Positive multiplicative noise; all of A, B, C, D must be > 0.
PartitionPair optimal_partition_multiplicative(const Interval& postf, const Interval& target);

/// Product grid of `resolution[i]` equal-width cells over each component's support hull.
std::vector<NoiseCell> uniform_noise_grid(const NoiseModel& noise,
                                          std::span<const std::size_t> resolution);

}  // namespace imcabs
