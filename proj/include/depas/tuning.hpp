#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "depas/numerics.hpp"
#include "depas/policy.hpp"
#include "depas/probability.hpp"

namespace depas {

enum class TuningMethod { chernoff, binomial };

// One tuning problem: find the least node count for a fixed band half-width
// (fixed_delta set) or the narrowest band for a fixed node count (fixed_nodes
// set), such that the correctness probability stays >= min_correctness.
struct TuningRequest {
  double desired_load = 0.8;
  double min_correctness = 0.99;
  std::optional<double> fixed_delta;    // min-n mode
  std::optional<long long> fixed_nodes; // min-delta mode
  double node_precision = 0.1;   // s_n: bracket tolerance when solving for n
  double eps_precision = 1e-3;   // s_eps: bracket tolerance when solving for eps
  double load_precision = 1e-3;  // s_p: sweep step on the rescaled load axis
  TuningMethod method = TuningMethod::chernoff;

  void validate() const {
    if (!(desired_load > 0.0 && desired_load < 1.0)) {
      throw std::invalid_argument("TuningRequest: desired load must lie in (0,1)");
    }
    if (!(min_correctness > 0.0 && min_correctness < 1.0)) {
      throw std::invalid_argument("TuningRequest: correctness threshold must lie in (0,1)");
    }
    if (fixed_delta.has_value() == fixed_nodes.has_value()) {
      throw std::invalid_argument("TuningRequest: exactly one of delta/n must be fixed");
    }
    if (fixed_delta && !(*fixed_delta > 0.0 && *fixed_delta < desired_load)) {
      throw std::domain_error("TuningRequest: delta must lie in (0, desired_load)");
    }
    if (fixed_nodes && *fixed_nodes < 1) {
      throw std::domain_error("TuningRequest: n must be positive");
    }
    if (!(node_precision > 0.0 && eps_precision > 0.0 && load_precision > 0.0)) {
      throw std::invalid_argument("TuningRequest: precisions must be positive");
    }
  }
};

// Fixed-n requests whose feasibility gate g(n0) > P0 fails have no solution.
struct infeasible_request : std::runtime_error {
  long long n0;
  double g_value;

  infeasible_request(long long n0_, double g_value_)
      : std::runtime_error("no band width guarantees the requested probability for n = " +
                           std::to_string(n0_) + " (g = " + std::to_string(g_value_) + ")"),
        n0(n0_),
        g_value(g_value_) {}
};

struct ChernoffMinNodesDiagnostics {
  std::optional<double> n1_star;  // two-sided branch supremum (eps0 < 1/3 only)
  double n2_star = 0.0;           // one-sided branch supremum
};

struct ChernoffMinDeltaDiagnostics {
  double p1_star = 0.0;
  double p2_star = 0.0;
  double p3_star = 0.0;
  double eps1_star = 0.0;
  double eps2_star = 0.0;
  double eps3_star = 0.0;
};

struct BinomialDiagnostics {
  double search_start;           // upper bound the downward sweep began at
  long long candidates_checked;  // values probed before stopping
};

using TuningDiagnostics =
    std::variant<ChernoffMinNodesDiagnostics, ChernoffMinDeltaDiagnostics, BinomialDiagnostics>;

// `value` is the minimum node count (integral) in min-n mode, or the minimum
// band half-width, reported on the s_eps * L0 grid, in min-delta mode.
struct TuningResult {
  double value;
  TuningDiagnostics diagnostics;
  std::chrono::duration<double> wall_time;
};

namespace detail {

inline constexpr double kEpsFloor = 1e-12;
inline constexpr double kThird = 1.0 / 3.0;

class StopwatchGuard {
 public:
  StopwatchGuard() : start_(std::chrono::steady_clock::now()) {}
  std::chrono::duration<double> elapsed() const {
    return std::chrono::steady_clock::now() - start_;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Loads probed by the binomial algorithms: L0 + delta + k * (s_p * L0),
// stopping strictly before 2*L0 so the rescaled grid has step exactly s_p.
template <typename Check>
bool for_each_probe_load(double desired_load, double delta, double load_precision,
                         Check&& holds) {
  const double step = load_precision * desired_load;
  const double limit = 2.0 * desired_load - 1e-12;
  for (long long k = 0;; ++k) {
    const double load = desired_load + delta + double(k) * step;
    if (load >= limit) return true;
    if (!holds(load)) return false;
  }
}

}  // namespace detail

// Least node count whose exponential lower bounds clear the threshold for
// every admissible load, for a fixed band half-width. Splits at eps0 = 1/3:
// below it the two-sided bound is swept on the inner load range and the
// one-sided branch maximized on the outer one; above it the one-sided branch
// alone applies. The Chebyshev estimate serves as the root-search ceiling.
inline TuningResult chernoff_min_n(const TuningRequest& req) {
  req.validate();
  if (!req.fixed_delta) throw std::invalid_argument("chernoff_min_n: request must fix delta");
  if (req.method != TuningMethod::chernoff) {
    throw std::invalid_argument("chernoff_min_n: request method must be chernoff");
  }
  const detail::StopwatchGuard clock;
  const ScalingPolicy policy(req.desired_load, *req.fixed_delta);
  const double eps0 = policy.eps();
  const double p0 = req.min_correctness;
  const long long ceiling = chebyshev_min_n(eps0, p0);

  ChernoffMinNodesDiagnostics diag;
  double n_star;
  if (eps0 < detail::kThird) {
    const double n1 = grid_max_root(
        [&](double p, double n) { return bound_b1(RescaledPoint{p, eps0}, n) - p0; },
        Interval{eps0, 1.0 - 2.0 * eps0}, Interval{1.0, std::max(2.0, double(ceiling))},
        SearchPrecision{req.load_precision, req.node_precision});
    const MaxPoint outer = unimodal_max([&](double p) { return n2_explicit(p, eps0, p0); },
                                        1.0 - 2.0 * eps0, 1.0, req.load_precision);
    diag.n1_star = n1;
    diag.n2_star = outer.value;
    n_star = std::max(n1, outer.value);
  } else {
    const MaxPoint outer = unimodal_max([&](double p) { return n2_explicit(p, eps0, p0); },
                                        eps0, 1.0, req.load_precision);
    diag.n2_star = outer.value;
    n_star = outer.value;
  }
  const double value = std::max(1.0, detail::ceil_snapped(n_star));
  return TuningResult{value, diag, clock.elapsed()};
}

// Narrowest band half-width for a fixed node count. Three branch suprema per
// the piecewise structure of the bound, each seeded with its continuity
// extension at the branch boundary; the reported delta is the rescaled
// maximum, rounded up to the s_eps * L0 grid so the guarantee survives.
inline TuningResult chernoff_min_delta(const TuningRequest& req) {
  req.validate();
  if (!req.fixed_nodes) throw std::invalid_argument("chernoff_min_delta: request must fix n");
  if (req.method != TuningMethod::chernoff) {
    throw std::invalid_argument("chernoff_min_delta: request method must be chernoff");
  }
  const detail::StopwatchGuard clock;
  const long long n0 = *req.fixed_nodes;
  const double p0 = req.min_correctness;
  const double gate = feasibility_g(n0);
  if (!(gate > p0)) throw infeasible_request(n0, gate);

  const double s_p = req.load_precision;
  const double s_eps = req.eps_precision;
  const double third = detail::kThird;
  ChernoffMinDeltaDiagnostics diag;

  // Inner branch: threshold root in (0, 1/3), then sweep the two-sided bound.
  const BracketedRoot r1 =
      bisect_root([&](double p) { return threshold_h1(p, n0) - p0; }, 1e-9, third - 1e-12, s_p);
  if (r1.status != RootStatus::found) {
    throw std::logic_error("chernoff_min_delta: threshold root missing in (0, 1/3)");
  }
  diag.p1_star = r1.value;  // upper end: the threshold already holds here
  double eps1 = diag.p1_star;
  {
    const double lo = std::min(diag.p1_star + s_p, third);
    eps1 = std::max(eps1, grid_max_root(
                              [&](double p, double eps) {
                                return bound_b1(RescaledPoint{p, eps}, double(n0)) - p0;
                              },
                              Interval{lo, third},
                              [](double p) { return Interval{detail::kEpsFloor, p}; },
                              SearchPrecision{s_p, s_eps}));
  }

  // Middle branch: left-limit threshold root, sweep the two-sided bound with
  // the per-load ceiling (1-p)/2.
  const BracketedRoot r2 = bisect_root([&](double p) { return threshold_h2(p, n0) - p0; },
                                       third + 1e-12, 1.0 - 1e-12, s_p);
  if (r2.status != RootStatus::found) {
    throw std::logic_error("chernoff_min_delta: threshold root missing in (1/3, 1)");
  }
  diag.p2_star = r2.lower();  // lower end: the decreasing threshold holds here
  double eps2 = 0.5 * (1.0 - diag.p2_star);
  {
    const double lo = std::min(third + s_p, diag.p2_star);
    eps2 = std::max(eps2, grid_max_root(
                              [&](double p, double eps) {
                                return bound_b1(RescaledPoint{p, eps}, double(n0)) - p0;
                              },
                              Interval{lo, diag.p2_star},
                              [](double p) { return Interval{detail::kEpsFloor, 0.5 * (1.0 - p)}; },
                              SearchPrecision{s_p, s_eps}));
  }

  // Outer branch: right-limit threshold root, sweep the one-sided bound on
  // [(1-p)/2, p].
  const BracketedRoot r3 = bisect_root([&](double p) { return threshold_h3(p, n0) - p0; },
                                       third + 1e-12, 1.0 - 1e-12, s_p);
  if (r3.status != RootStatus::found) {
    throw std::logic_error("chernoff_min_delta: threshold root missing in (1/3, 1)");
  }
  diag.p3_star = r3.lower();
  double eps3 = 0.5 * (1.0 - diag.p3_star);
  {
    const double hi = std::max(diag.p3_star, 1.0 - s_p);
    eps3 = std::max(eps3, grid_max_root(
                              [&](double p, double eps) {
                                return bound_b2(RescaledPoint{p, eps}, double(n0)) - p0;
                              },
                              Interval{diag.p3_star, hi},
                              [](double p) { return Interval{0.5 * (1.0 - p), p}; },
                              SearchPrecision{s_p, s_eps}));
  }

  diag.eps1_star = eps1;
  diag.eps2_star = eps2;
  diag.eps3_star = eps3;
  const double eps_star = std::max({eps1, eps2, eps3});
  const double grid = s_eps * req.desired_load;
  const double value = detail::ceil_snapped(eps_star * req.desired_load / grid) * grid;
  return TuningResult{value, diag, clock.elapsed()};
}

// Exact-probability variant of min-n: walk candidates down from the Chernoff
// result (which is guaranteed feasible) and stop one step above the first
// candidate that fails somewhere on the load grid.
inline TuningResult binomial_min_n(const TuningRequest& req) {
  req.validate();
  if (!req.fixed_delta) throw std::invalid_argument("binomial_min_n: request must fix delta");
  if (req.method != TuningMethod::binomial) {
    throw std::invalid_argument("binomial_min_n: request method must be binomial");
  }
  const detail::StopwatchGuard clock;
  TuningRequest upper = req;
  upper.method = TuningMethod::chernoff;
  const long long start = static_cast<long long>(chernoff_min_n(upper).value);

  const ScalingPolicy policy(req.desired_load, *req.fixed_delta);
  const double p0 = req.min_correctness;
  auto feasible = [&](long long n) {
    return detail::for_each_probe_load(
        req.desired_load, *req.fixed_delta, req.load_precision,
        [&](double load) { return binomial_correctness(load, policy, n) - p0 >= 0.0; });
  };

  if (!feasible(start)) {
    throw std::logic_error("binomial_min_n: Chernoff upper bound is not feasible");
  }
  long long n = start;
  long long checked = 1;
  while (n > 1 && feasible(n - 1)) {
    --n;
    ++checked;
  }
  return TuningResult{double(n), BinomialDiagnostics{double(start), checked}, clock.elapsed()};
}

// Exact-probability variant of min-delta: walk the band width down from the
// Chernoff result along the s_eps * L0 grid.
inline TuningResult binomial_min_delta(const TuningRequest& req) {
  req.validate();
  if (!req.fixed_nodes) throw std::invalid_argument("binomial_min_delta: request must fix n");
  if (req.method != TuningMethod::binomial) {
    throw std::invalid_argument("binomial_min_delta: request method must be binomial");
  }
  const detail::StopwatchGuard clock;
  TuningRequest upper = req;
  upper.method = TuningMethod::chernoff;
  const double start = chernoff_min_delta(upper).value;

  const long long n0 = *req.fixed_nodes;
  const double p0 = req.min_correctness;
  auto feasible = [&](double delta) {
    const ScalingPolicy policy(req.desired_load, delta);
    return detail::for_each_probe_load(
        req.desired_load, delta, req.load_precision,
        [&](double load) { return binomial_correctness(load, policy, n0) - p0 >= 0.0; });
  };

  if (!feasible(start)) {
    throw std::logic_error("binomial_min_delta: Chernoff upper bound is not feasible");
  }
  const double grid = req.eps_precision * req.desired_load;
  long long steps = 0;
  long long checked = 1;
  while (true) {
    const double next = start - double(steps + 1) * grid;
    if (!(next > detail::kEpsFloor)) break;
    ++checked;
    if (!feasible(next)) break;
    ++steps;
  }
  const double value = start - double(steps) * grid;
  return TuningResult{value, BinomialDiagnostics{start, checked}, clock.elapsed()};
}

}  // namespace depas
