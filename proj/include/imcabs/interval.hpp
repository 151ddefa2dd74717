#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "imcabs/errors.hpp"

namespace imcabs {

/// Closed real interval [lo, hi]. Ends may be infinite.
///
/// All arithmetic below is a natural interval extension: the result encloses
/// every value the operation can take on the argument intervals. Transcendental
/// functions are widened by one ulp on each side because libm does not promise
/// correctly rounded results.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double value) : lo(value), hi(value) {}  // NOLINT: point promotion
  constexpr Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {}

  static constexpr Interval empty() {
    return {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  }
  static constexpr Interval whole() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  constexpr bool is_empty() const { return lo > hi; }
  constexpr double width() const { return is_empty() ? 0.0 : hi - lo; }
  constexpr double mid() const { return 0.5 * (lo + hi); }
  constexpr bool contains(double v) const { return lo <= v && v <= hi; }
  constexpr bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  constexpr bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  bool is_bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo << ", " << x.hi << ']';
}

inline Interval hull(const Interval& a, const Interval& b) {
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

namespace detail {

inline double down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
inline double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }
inline Interval widen(double lo, double hi) { return {down(lo), up(hi)}; }

// 0 * inf is taken as 0: an infinite end is a limit, never attained.
inline double mul(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

}  // namespace detail

inline Interval operator-(const Interval& x) { return {-x.hi, -x.lo}; }

inline Interval operator+(const Interval& a, const Interval& b) {
  return {a.lo + b.lo, a.hi + b.hi};
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return {a.lo - b.hi, a.hi - b.lo};
}

inline Interval operator*(const Interval& a, const Interval& b) {
  const double p[4] = {detail::mul(a.lo, b.lo), detail::mul(a.lo, b.hi), detail::mul(a.hi, b.lo),
                       detail::mul(a.hi, b.hi)};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) throw EvaluationError("interval division by a divisor containing 0");
  const double p[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

/// x^n for integer n >= 0 by repeated squaring. Shared by the point and the
/// interval evaluators so both round identically.
inline double ipow(double x, int n) {
  double acc = 1.0;
  for (double base = x; n > 0; n >>= 1) {
    if (n & 1) acc *= base;
    if (n > 1) base *= base;
  }
  return acc;
}

/// x^n for integer n; even powers use sign analysis so the result never dips below 0.
inline Interval pow(const Interval& x, int n) {
  if (n == 0) return Interval(1.0);
  if (n < 0) return Interval(1.0) / pow(x, -n);
  if (n % 2 == 1) return {ipow(x.lo, n), ipow(x.hi, n)};
  const double a = std::abs(x.lo);
  const double b = std::abs(x.hi);
  const double mag_lo = x.contains_zero() ? 0.0 : std::min(a, b);
  return {ipow(mag_lo, n), ipow(std::max(a, b), n)};
}

inline Interval abs(const Interval& x) {
  if (x.lo >= 0.0) return x;
  if (x.hi <= 0.0) return -x;
  return {0.0, std::max(-x.lo, x.hi)};
}

inline Interval exp(const Interval& x) {
  auto r = detail::widen(std::exp(x.lo), std::exp(x.hi));
  r.lo = std::max(r.lo, 0.0);
  return r;
}

inline Interval sqrt(const Interval& x) {
  if (x.lo < 0.0) throw EvaluationError("sqrt of an interval reaching below 0");
  auto r = detail::widen(std::sqrt(x.lo), std::sqrt(x.hi));
  r.lo = std::max(r.lo, 0.0);
  return r;
}

namespace detail {

// True if some point phase + 2*pi*k lies inside [lo, hi].
inline bool hits_phase(double lo, double hi, double phase) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double k = std::ceil((lo - phase) / two_pi);
  return phase + k * two_pi <= hi;
}

inline Interval periodic(const Interval& x, double (*fn)(double), double max_phase,
                         double min_phase) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  if (!x.is_bounded() || x.width() >= two_pi) return {-1.0, 1.0};
  const double a = fn(x.lo);
  const double b = fn(x.hi);
  double lo = std::min(a, b);
  double hi = std::max(a, b);
  if (hits_phase(x.lo, x.hi, max_phase)) hi = 1.0;
  if (hits_phase(x.lo, x.hi, min_phase)) lo = -1.0;
  Interval r = widen(lo, hi);
  return {std::max(r.lo, -1.0), std::min(r.hi, 1.0)};
}

}  // namespace detail

inline Interval sin(const Interval& x) {
  constexpr double half_pi = 1.5707963267948966192313216916398;
  return detail::periodic(x, static_cast<double (*)(double)>(std::sin), half_pi, -half_pi);
}

inline Interval cos(const Interval& x) {
  constexpr double pi = 3.1415926535897932384626433832795;
  return detail::periodic(x, static_cast<double (*)(double)>(std::cos), 0.0, pi);
}

}  // namespace imcabs
