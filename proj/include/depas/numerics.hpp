#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "depas/parallel.hpp"

namespace depas {

// Step of the outer grid sweep (s1) and bracket tolerance of the inner
// root/maximum search (s2).
struct SearchPrecision {
  double sweep_step;
  double tolerance;

  void validate() const {
    if (!(sweep_step > 0.0) || !(tolerance > 0.0)) {
      throw std::invalid_argument("SearchPrecision: steps must be positive");
    }
  }
};

struct Interval {
  double lo;
  double hi;
};

enum class RootStatus { found, no_root_below, no_root_above };

// Final bisection bracket. `value` is the upper end, so for an increasing
// constraint function f the returned point already satisfies f(value) >= 0.
struct BracketedRoot {
  double value;
  double bracket_width;
  RootStatus status;

  double lower() const { return value - bracket_width; }
};

// Raised when a sweep point admits no feasible value anywhere in range.
struct infeasible_sweep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bisection on a function monotone over [lo, hi] (either direction). With no
// sign change the status reports on which side of the bracket the root lies:
// no_root_below means the constraint f >= 0 already holds at lo for an
// increasing f.
template <typename F>
BracketedRoot bisect_root(F&& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisect_root: tolerance must be positive");
  if (!(lo < hi)) throw std::invalid_argument("bisect_root: requires lo < hi");
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  const bool increasing = f_hi >= f_lo;
  const bool lo_nonneg = f_lo >= 0.0;
  if (lo_nonneg == (f_hi >= 0.0)) {
    const bool root_below = increasing == lo_nonneg;
    if (root_below) return BracketedRoot{lo, 0.0, RootStatus::no_root_below};
    return BracketedRoot{hi, 0.0, RootStatus::no_root_above};
  }
  int guard = 0;
  while (hi - lo > tol && guard++ < 200) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;  // bracket narrower than one ulp
    if ((f(mid) >= 0.0) == lo_nonneg) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return BracketedRoot{hi, hi - lo, RootStatus::found};
}

namespace detail {

// Grid over [lo, hi]: lo + k*step for the interior, final point clamped to hi
// so both endpoints are always probed.
inline std::size_t sweep_size(double lo, double hi, double step) {
  if (hi <= lo) return 1;
  const double raw = (hi - lo) / step;
  const double interior = std::ceil(raw - 1e-9);
  if (!(interior >= 1.0)) return 2;
  if (interior > 1e9) throw std::invalid_argument("sweep step too small for interval");
  return std::size_t(interior) + 1;
}

inline double sweep_point(double lo, double hi, double step, std::size_t k, std::size_t count) {
  return k + 1 == count ? hi : lo + double(k) * step;
}

}  // namespace detail

// Sweeps x across its interval with step s1; for each x finds, by bisection
// with tolerance s2, the least y with f(x, y) >= 0 (f strictly increasing in
// y) and rounds it up to the bracket top. Returns the maximum over the sweep,
// which therefore satisfies the constraint at every probed x. Sweep points
// where the constraint holds throughout contribute the interval's lower end;
// a sweep point where it fails everywhere makes the whole search infeasible.
// y_bounds(x) supplies the per-x search interval.
template <typename F2, typename YBounds>
double grid_max_root(F2&& f, Interval x_range, YBounds&& y_bounds, SearchPrecision prec) {
  prec.validate();
  if (!(x_range.lo <= x_range.hi)) {
    throw std::invalid_argument("grid_max_root: empty x interval");
  }
  const std::size_t count = detail::sweep_size(x_range.lo, x_range.hi, prec.sweep_step);
  const double lowest = -std::numeric_limits<double>::infinity();

  auto eval_point = [&](std::size_t k) {
    const double x = detail::sweep_point(x_range.lo, x_range.hi, prec.sweep_step, k, count);
    const Interval yb = y_bounds(x);
    if (!(yb.lo < yb.hi)) return yb.lo;
    const BracketedRoot root =
        bisect_root([&](double y) { return f(x, y); }, yb.lo, yb.hi, prec.tolerance);
    switch (root.status) {
      case RootStatus::found:
        return root.value;
      case RootStatus::no_root_below:
        return yb.lo;
      case RootStatus::no_root_above:
        break;
    }
    throw infeasible_sweep("grid_max_root: no feasible value at x = " + std::to_string(x));
  };

  std::vector<double> partial(detail::thread_budget(), lowest);
  std::atomic<unsigned> next_slot{0};
  detail::parallel_chunks(count, [&](std::size_t begin, std::size_t end) {
    double local = lowest;
    for (std::size_t k = begin; k < end; ++k) local = std::max(local, eval_point(k));
    partial[next_slot.fetch_add(1)] = local;
  });
  double best = lowest;
  for (double v : partial) best = std::max(best, v);
  return best;
}

template <typename F2>
double grid_max_root(F2&& f, Interval x_range, Interval y_range, SearchPrecision prec) {
  return grid_max_root(std::forward<F2>(f), x_range, [y_range](double) { return y_range; },
                       prec);
}

struct MaxPoint {
  double argmax;
  double value;
};

// Golden-section maximum search for a function unimodal on [lo, hi]. All
// probes stay strictly inside, and the endpoints are represented by lo + tol
// and hi - tol, so intervals open at either end are handled by passing their
// closure.
template <typename F>
MaxPoint unimodal_max(F&& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("unimodal_max: tolerance must be positive");
  if (!(lo < hi)) throw std::invalid_argument("unimodal_max: requires lo < hi");
  const double a0 = lo + tol;
  const double b0 = hi - tol;
  if (!(a0 < b0)) {
    const double x = 0.5 * (lo + hi);
    return MaxPoint{x, f(x)};
  }
  constexpr double inv_phi = 0.6180339887498949;
  double a = a0, b = b0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int guard = 0;
  while (b - a > tol && guard++ < 200) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  MaxPoint best{a0, f(a0)};
  const double fb0 = f(b0);
  if (fb0 > best.value) best = MaxPoint{b0, fb0};
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  if (fm > best.value) best = MaxPoint{mid, fm};
  return best;
}

}  // namespace depas
