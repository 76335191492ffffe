#pragma once

// Outward-rounded interval arithmetic and finite unions of intervals.
//
// Every endpoint operation computes the round-to-nearest result and then uses
// an error-free transformation (TwoSum, FMA residual) to decide whether the
// exact value lies below or above it. Only inexact results are widened, so
// exact inputs (small integers, dyadic rationals, zero) stay exact.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cadtopo {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace rnd {

inline double up(double x) { return std::nextafter(x, kInf); }
inline double down(double x) { return std::nextafter(x, -kInf); }

// Below this magnitude the FMA residual may itself underflow.
inline constexpr double kTiny = 1e-290;

inline double add_down(double a, double b) {
  double s = a + b;
  if (std::isinf(s)) {
    if (std::isfinite(a) && std::isfinite(b)) return s > 0 ? std::numeric_limits<double>::max() : s;
    return s;
  }
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return err < 0 ? down(s) : s;
}

inline double add_up(double a, double b) {
  double s = a + b;
  if (std::isinf(s)) {
    if (std::isfinite(a) && std::isfinite(b)) return s < 0 ? -std::numeric_limits<double>::max() : s;
    return s;
  }
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return err > 0 ? up(s) : s;
}

// 0 * inf is taken as 0: an infinite endpoint means "unbounded", never attained.
inline double mul_down(double a, double b) {
  if (a == 0 || b == 0) return 0;
  double p = a * b;
  if (std::isinf(p)) {
    if (std::isfinite(a) && std::isfinite(b)) return p > 0 ? std::numeric_limits<double>::max() : p;
    return p;
  }
  if (std::fabs(p) < kTiny) return down(p);
  double err = std::fma(a, b, -p);
  return err < 0 ? down(p) : p;
}

inline double mul_up(double a, double b) {
  if (a == 0 || b == 0) return 0;
  double p = a * b;
  if (std::isinf(p)) {
    if (std::isfinite(a) && std::isfinite(b)) return p < 0 ? -std::numeric_limits<double>::max() : p;
    return p;
  }
  if (std::fabs(p) < kTiny) return up(p);
  double err = std::fma(a, b, -p);
  return err > 0 ? up(p) : p;
}

// Reciprocal of a nonzero value.
inline double recip_down(double b) {
  if (std::isinf(b)) return 0;
  double q = 1.0 / b;
  if (std::isinf(q)) return b > 0 ? std::numeric_limits<double>::max() : q;
  if (std::fabs(q) < kTiny || std::fabs(b) < kTiny) return down(q);
  double r = std::fma(-q, b, 1.0);  // 1 - q*b exactly
  // exact = q + r/b
  double corr = r / b;
  return corr < 0 ? down(q) : q;
}

inline double recip_up(double b) {
  if (std::isinf(b)) return 0;
  double q = 1.0 / b;
  if (std::isinf(q)) return b < 0 ? -std::numeric_limits<double>::max() : q;
  if (std::fabs(q) < kTiny || std::fabs(b) < kTiny) return up(q);
  double r = std::fma(-q, b, 1.0);
  double corr = r / b;
  return corr > 0 ? up(q) : q;
}

inline double sqrt_down(double a) {
  if (a <= 0) return 0;
  if (std::isinf(a)) return a;
  double s = std::sqrt(a);
  double r = std::fma(-s, s, a);
  return r < 0 ? down(s) : s;
}

inline double sqrt_up(double a) {
  if (a <= 0) return 0;
  if (std::isinf(a)) return a;
  double s = std::sqrt(a);
  double r = std::fma(-s, s, a);
  return r > 0 ? up(s) : s;
}

}  // namespace rnd

/// Closed interval [lo, hi] over the extended reals.
struct Interval {
  double lo = 0;
  double hi = 0;

  static Interval point(double v) { return {v, v}; }
  static Interval entire() { return {-kInf, kInf}; }

  bool contains(double v) const { return lo <= v && v <= hi; }
  bool is_point() const { return lo == hi; }
  double width() const { return hi - lo; }
  double mid() const {
    if (std::isinf(lo) && std::isinf(hi)) return 0;
    if (std::isinf(lo)) return hi - 1;
    if (std::isinf(hi)) return lo + 1;
    return 0.5 * (lo + hi);
  }
  bool operator==(const Interval&) const = default;
};

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline bool overlaps(const Interval& a, const Interval& b) { return a.lo <= b.hi && b.lo <= a.hi; }

inline Interval operator+(const Interval& a, const Interval& b) {
  return {rnd::add_down(a.lo, b.lo), rnd::add_up(a.hi, b.hi)};
}

inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval operator-(const Interval& a, const Interval& b) { return a + (-b); }

inline Interval operator*(const Interval& a, const Interval& b) {
  double l = std::min({rnd::mul_down(a.lo, b.lo), rnd::mul_down(a.lo, b.hi), rnd::mul_down(a.hi, b.lo),
                       rnd::mul_down(a.hi, b.hi)});
  double h = std::max({rnd::mul_up(a.lo, b.lo), rnd::mul_up(a.lo, b.hi), rnd::mul_up(a.hi, b.lo),
                       rnd::mul_up(a.hi, b.hi)});
  return {l, h};
}

/// Reciprocal of an interval that does not contain zero in its interior.
/// A zero endpoint maps to an infinite endpoint.
inline Interval recip_nonstraddling(const Interval& b) {
  if (b.lo >= 0) {
    double l = rnd::recip_down(b.hi);
    double h = b.lo == 0 ? kInf : rnd::recip_up(b.lo);
    return {l, h};
  }
  double l = b.hi == 0 ? -kInf : rnd::recip_down(b.hi);
  double h = rnd::recip_up(b.lo);
  return {l, h};
}

/// |x|^n for a nonnegative interval.
inline Interval pow_nonneg(const Interval& a, int n) {
  Interval r = Interval::point(1);
  for (int i = 0; i < n; ++i) r = {rnd::mul_down(r.lo, a.lo), rnd::mul_up(r.hi, a.hi)};
  return r;
}

/// Finite union of disjoint closed intervals, plus a flag recording that the
/// enclosed function may be undefined somewhere on the evaluated box.
///
/// An enclosure with no pieces means "undefined everywhere".
class Enclosure {
 public:
  static constexpr std::size_t kMaxPieces = 8;

  Enclosure() = default;
  explicit Enclosure(Interval i) : pieces_{i} {}
  static Enclosure empty_set() { return Enclosure(); }

  const std::vector<Interval>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  bool partial() const { return partial_; }
  void set_partial(bool p = true) { partial_ = partial_ || p; }

  void add(Interval i) { pieces_.push_back(i); }
  void merge_from(const Enclosure& o) {
    pieces_.insert(pieces_.end(), o.pieces_.begin(), o.pieces_.end());
    partial_ = partial_ || o.partial_;
  }

  /// Sort, fuse overlapping pieces and cap the piece count.
  void normalize();

  Interval hull() const;
  double min() const { return pieces_.front().lo; }
  double max() const { return pieces_.back().hi; }
  bool contains(double v) const;
  bool intersects(const Interval& i) const;

 private:
  std::vector<Interval> pieces_;
  bool partial_ = false;
};

inline void Enclosure::normalize() {
  if (pieces_.size() <= 1) return;
  std::sort(pieces_.begin(), pieces_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  out.reserve(pieces_.size());
  for (const auto& p : pieces_) {
    if (!out.empty() && p.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, p.hi);
    else
      out.push_back(p);
  }
  while (out.size() > kMaxPieces) {
    std::size_t best = 0;
    double gap = kInf;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      double g = out[i + 1].lo - out[i].hi;
      if (g < gap) {
        gap = g;
        best = i;
      }
    }
    out[best].hi = out[best + 1].hi;
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  }
  pieces_ = std::move(out);
}

inline Interval Enclosure::hull() const {
  if (pieces_.empty()) return {kInf, -kInf};
  Interval h = pieces_.front();
  for (const auto& p : pieces_) h = cadtopo::hull(h, p);
  return h;
}

inline bool Enclosure::contains(double v) const {
  return std::any_of(pieces_.begin(), pieces_.end(), [v](const Interval& p) { return p.contains(v); });
}

inline bool Enclosure::intersects(const Interval& i) const {
  return std::any_of(pieces_.begin(), pieces_.end(), [&i](const Interval& p) { return overlaps(p, i); });
}

}  // namespace cadtopo
