#include "imcabs/noise.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "imcabs/errors.hpp"

namespace imcabs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal CDF and its complement, accurate in both tails.
double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double phi_c(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

NoiseComponent::NoiseComponent(Uniform u) : v_(u) {
  if (!(u.lo <= u.hi) || !std::isfinite(u.lo) || !std::isfinite(u.hi)) {
    throw InvalidArgument("uniform noise needs finite lo <= hi");
  }
}

NoiseComponent::NoiseComponent(TruncatedGaussian g) : v_(g) {
  if (!(g.stddev > 0.0) || !std::isfinite(g.mean)) {
    throw InvalidArgument("truncated Gaussian needs a finite mean and stddev > 0");
  }
  if (!(g.lo < g.hi)) throw InvalidArgument("truncated Gaussian needs lo < hi");
  const double zl = (g.lo - g.mean) / g.stddev;
  const double zh = (g.hi - g.mean) / g.stddev;
  phi_lo_ = phi(zl);
  phi_hi_ = phi(zh);
  q_lo_ = phi_c(zl);
  q_hi_ = phi_c(zh);
  if (!(std::max(phi_hi_ - phi_lo_, q_lo_ - q_hi_) > 0.0)) {
    throw InvalidArgument("truncation interval carries no Gaussian mass");
  }
}

NoiseComponent::NoiseComponent(Mixture m) : v_(std::move(m)) {
  const auto& mix = std::get<Mixture>(v_);
  if (mix.weights.empty() || mix.weights.size() != mix.components.size()) {
    throw InvalidArgument("mixture needs one positive weight per component");
  }
  double total = 0.0;
  for (double w : mix.weights) {
    if (!(w > 0.0)) throw InvalidArgument("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("mixture weights must sum to 1");
}

Interval NoiseComponent::support() const {
  return std::visit(overloaded{
                        [](const Uniform& u) { return Interval{u.lo, u.hi}; },
                        [](const TruncatedGaussian& g) { return Interval{g.lo, g.hi}; },
                        [](const Mixture& m) {
                          Interval s = Interval::empty();
                          for (const auto& c : m.components) s = hull(s, c.support());
                          return s;
                        },
                    },
                    v_);
}

NoiseModel::NoiseModel(std::vector<NoiseComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("noise model needs at least one component");
}

Box NoiseModel::support() const {
  std::vector<Interval> sides;
  for (const auto& c : components_) sides.push_back(c.support());
  return Box(std::move(sides));
}

double cdf(const NoiseComponent& c, double t) {
  if (std::isnan(t)) throw InvalidArgument("cdf at NaN");
  return std::visit(
      overloaded{
          [&](const Uniform& u) {
            if (t >= u.hi) return 1.0;
            if (t < u.lo) return 0.0;
            return clamp01((t - u.lo) / (u.hi - u.lo));
          },
          [&](const TruncatedGaussian& g) {
            if (t <= g.lo) return 0.0;
            if (t >= g.hi) return 1.0;
            const double z = (t - g.mean) / g.stddev;
            // Work in whichever tail keeps the subtraction well conditioned.
            if (g.lo > g.mean) return clamp01((c.q_lo_ - phi_c(z)) / (c.q_lo_ - c.q_hi_));
            return clamp01((phi(z) - c.phi_lo_) / (c.phi_hi_ - c.phi_lo_));
          },
          [&](const Mixture& m) {
            double p = 0.0;
            for (std::size_t k = 0; k < m.weights.size(); ++k) p += m.weights[k] * cdf(m.components[k], t);
            return clamp01(p);
          },
      },
      c.variant());
}

double cdf_left(const NoiseComponent& c, double t) {
  return std::visit(overloaded{
                        [&](const Uniform& u) {
                          if (u.lo == u.hi) return t > u.lo ? 1.0 : 0.0;
                          return cdf(c, t);
                        },
                        [&](const TruncatedGaussian&) { return cdf(c, t); },
                        [&](const Mixture& m) {
                          double p = 0.0;
                          for (std::size_t k = 0; k < m.weights.size(); ++k) {
                            p += m.weights[k] * cdf_left(m.components[k], t);
                          }
                          return clamp01(p);
                        },
                    },
                    c.variant());
}

double interval_probability(const NoiseComponent& c, const Interval& i) {
  if (i.is_empty()) return 0.0;
  const double hi = i.hi == kInf ? 1.0 : cdf(c, i.hi);
  const double lo = i.lo == -kInf ? 0.0 : cdf_left(c, i.lo);
  return clamp01(hi - lo);
}

double cell_probability(const NoiseModel& noise, std::span<const Interval> cell) {
  if (cell.size() != noise.dim()) throw InvalidArgument("noise cell dimension mismatch");
  double p = 1.0;
  for (std::size_t i = 0; i < cell.size(); ++i) p *= interval_probability(noise[i], cell[i]);
  return clamp01(p);
}

double quantile(const NoiseComponent& c, double u) {
  u = clamp01(u);
  return std::visit(
      overloaded{
          [&](const Uniform& uni) { return uni.lo + u * (uni.hi - uni.lo); },
          [&](const TruncatedGaussian& g) {
            double lo = std::isfinite(g.lo) ? g.lo : g.mean - 40.0 * g.stddev;
            double hi = std::isfinite(g.hi) ? g.hi : g.mean + 40.0 * g.stddev;
            if (u <= 0.0) return lo;
            if (u >= 1.0) return hi;
            auto f = [&](double t) { return cdf(c, t) - u; };
            if (f(lo) >= 0.0) return lo;
            if (f(hi) <= 0.0) return hi;
            std::uintmax_t iterations = 200;
            auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12; };
            const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iterations);
            return 0.5 * (a + b);
          },
          [&](const Mixture& m) {
            double acc = 0.0;
            for (std::size_t k = 0; k < m.weights.size(); ++k) {
              const double next = acc + m.weights[k];
              if (u < next || k + 1 == m.weights.size()) {
                return quantile(m.components[k], (u - acc) / m.weights[k]);
              }
              acc = next;
            }
            return quantile(m.components.back(), 1.0);
          },
      },
      c.variant());
}

std::array<Interval, 3> PartitionPair::upper_cells() const {
  return {Interval{-kInf, eps1}, Interval{eps1, eps2}, Interval{eps2, kInf}};
}

std::array<Interval, 3> PartitionPair::lower_cells() const {
  return {Interval{-kInf, eps3}, lower_cell(), Interval{eps4, kInf}};
}

PartitionPair optimal_partition_affine(const Interval& postf, const Interval& target) {
  if (!postf.is_bounded() || !target.is_bounded() || postf.is_empty() || target.is_empty()) {
    throw InvalidArgument("affine partition needs bounded non-empty intervals");
  }
  const double a = target.lo, b = target.hi, c = postf.lo, d = postf.hi;
  PartitionPair p;
  p.eps1 = a - d;
  p.eps2 = b - c;
  p.eps3 = a - c;
  p.eps4 = b - d;
  p.lower_empty = p.eps3 > p.eps4;
  return p;
}

PartitionPair optimal_partition_multiplicative(const Interval& postf, const Interval& target) {
  if (!postf.is_bounded() || !target.is_bounded() || postf.is_empty() || target.is_empty()) {
    throw InvalidArgument("multiplicative partition needs bounded non-empty intervals");
  }
  const double a = target.lo, b = target.hi, c = postf.lo, d = postf.hi;
  if (!(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0)) {
    throw InvalidArgument("multiplicative partition needs strictly positive target and posterior");
  }
  PartitionPair p;
  p.eps1 = a / d;
  p.eps2 = b / c;
  p.eps3 = a / c;
  p.eps4 = b / d;
  p.lower_empty = p.eps3 > p.eps4;
  return p;
}

std::vector<NoiseCell> uniform_noise_grid(const NoiseModel& noise,
                                          std::span<const std::size_t> resolution) {
  const std::size_t n = noise.dim();
  if (resolution.size() != n) throw InvalidArgument("one noise grid resolution per component");
  // Per component: cell intervals and their probabilities (first cell keeps the left atom).
  std::vector<std::vector<Interval>> sides(n);
  std::vector<std::vector<double>> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (resolution[i] == 0) throw InvalidArgument("noise grid resolution must be >= 1");
    const Interval s = noise[i].support();
    if (!s.is_bounded()) {
      throw UnsupportedConfiguration("noise component " + std::to_string(i + 1) +
                                     " has unbounded support; gridding needs bounded support");
    }
    const std::size_t r = s.width() > 0.0 ? resolution[i] : 1;
    double prev_cdf = cdf_left(noise[i], s.lo);
    for (std::size_t k = 0; k < r; ++k) {
      const double lo = k == 0 ? s.lo : s.lo + s.width() * static_cast<double>(k) / static_cast<double>(r);
      const double hi = k + 1 == r ? s.hi : s.lo + s.width() * static_cast<double>(k + 1) / static_cast<double>(r);
      const double next_cdf = cdf(noise[i], hi);
      sides[i].emplace_back(lo, hi);
      probs[i].push_back(clamp01(next_cdf - prev_cdf));
      prev_cdf = next_cdf;
    }
  }
  GridShape shape;
  for (std::size_t i = 0; i < n; ++i) shape.resolution.push_back(sides[i].size());
  std::vector<NoiseCell> cells;
  cells.reserve(shape.cell_count());
  for (std::size_t flat = 0; flat < shape.cell_count(); ++flat) {
    const auto index = shape.unravel(flat);
    std::vector<Interval> bounds(n);
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      bounds[i] = sides[i][index[i]];
      p *= probs[i][index[i]];
    }
    cells.push_back({Box(std::move(bounds)), p});
  }
  return cells;
}

}  // namespace imcabs
