#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "depas/policy.hpp"

namespace depas {

namespace detail {

// Slack for domain checks that sit on closed boundaries after floating-point
// arithmetic (p = eps, p = 1 - 2*eps, eps = 1/3 all occur as bracket ends).
inline constexpr double kDomainSlack = 1e-12;

// Snap values that are integral up to rounding noise, so the strict-inequality
// index bounds behave deterministically when the optimal counts land on exact
// integers (rational grids hit them all the time).
inline double snap_integer(double m) {
  const double r = std::round(m);
  return std::abs(m - r) <= 1e-9 * std::max(1.0, std::abs(m)) ? r : m;
}

// ceil() that forgives upward rounding noise in its argument.
inline double ceil_snapped(double x) { return std::ceil(x - 1e-9); }

}  // namespace detail

// Divergence between Bernoulli distributions with success rates x and y,
// with the conventions 0*ln(0) = 0 at x = 0 and x = 1.
inline double kl_divergence(double x, double y) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("kl_divergence: x must lie in [0,1], got " + std::to_string(x));
  }
  if (!(y > 0.0 && y < 1.0)) {
    throw std::domain_error("kl_divergence: y must lie in (0,1), got " + std::to_string(y));
  }
  const double a = x == 0.0 ? 0.0 : x * std::log(x / y);
  const double b = x == 1.0 ? 0.0 : (1.0 - x) * std::log((1.0 - x) / (1.0 - y));
  return std::max(a + b, 0.0);
}

// pi = |L - L0| / L0. Exceeds 1 once L >= 2*L0; the integer part of the
// excess drives unconditional additions, the fractional part the coin flip.
inline double probability_indicator(double load, double desired_load) {
  if (!(desired_load > 0.0 && desired_load < 1.0)) {
    throw std::domain_error("probability_indicator: desired load must lie in (0,1)");
  }
  if (!(load >= 0.0)) {
    throw std::domain_error("probability_indicator: load must be nonnegative");
  }
  return std::abs(load - desired_load) / desired_load;
}

// Per-node addition probability p = (L - L0)/L0 for loads in [L0, 2*L0).
// Callers must strip the deterministic part first when L >= 2*L0.
inline double scaling_probability(double load, double desired_load) {
  if (!(desired_load > 0.0 && desired_load < 1.0)) {
    throw std::domain_error("scaling_probability: desired load must lie in (0,1)");
  }
  if (!(load >= desired_load - detail::kDomainSlack && load < 2.0 * desired_load)) {
    throw std::domain_error("scaling_probability: load " + std::to_string(load) +
                            " outside [L0, 2*L0)");
  }
  return std::max((load - desired_load) / desired_load, 0.0);
}

// Number of nodes (generally fractional) whose addition brings the average
// load from L down to exactly the target: M = n*(L - target)/target.
inline double optimal_added_nodes(long long n, double load, double target_load) {
  if (n < 1) throw std::domain_error("optimal_added_nodes: n must be positive");
  if (!(target_load > 0.0 && target_load < 1.0)) {
    throw std::domain_error("optimal_added_nodes: target load must lie in (0,1)");
  }
  if (!(load >= target_load - detail::kDomainSlack)) {
    throw std::domain_error("optimal_added_nodes: load below target");
  }
  return double(n) * (load - target_load) / target_load;
}

namespace detail {

// M with no range policing; the interval ends use targets L0 +/- delta which
// may lawfully exceed 1.
inline double optimal_count(long long n, double load, double target) {
  return double(n) * (load - target) / target;
}

inline double log_binomial_term(long long n, long long i, double log_gamma_n1, double log_p,
                                double log_1p) {
  return log_gamma_n1 - std::lgamma(double(i) + 1.0) - std::lgamma(double(n - i) + 1.0) +
         double(i) * log_p + double(n - i) * log_1p;
}

}  // namespace detail

// Probability that the number of added nodes lands strictly inside
// (M(n,L,L0+delta), M(n,L,L0-delta)) when every one of n nodes flips a coin
// with success rate p = (L-L0)/L0. Integral interval ends are excluded.
// Terms are evaluated in log space and accumulated smallest-first, so node
// counts in the thousands stay accurate.
inline double binomial_correctness(double load, const ScalingPolicy& policy, long long n) {
  if (n < 1) throw std::domain_error("binomial_correctness: n must be positive");
  if (!(load >= policy.upper() - detail::kDomainSlack && load < 2.0 * policy.desired_load)) {
    throw std::domain_error("binomial_correctness: load " + std::to_string(load) +
                            " outside [L0+delta, 2*L0)");
  }
  const double p = scaling_probability(load, policy.desired_load);
  const double m_lo = detail::snap_integer(detail::optimal_count(n, load, policy.upper()));
  const double m_hi = detail::snap_integer(detail::optimal_count(n, load, policy.lower()));
  long long i_lo = static_cast<long long>(std::floor(m_lo)) + 1;
  long long i_hi = static_cast<long long>(std::ceil(m_hi)) - 1;
  i_lo = std::max<long long>(i_lo, 0);
  i_hi = std::min<long long>(i_hi, n);
  if (i_lo > i_hi) return 0.0;
  if (p <= 0.0) return i_lo == 0 ? 1.0 : 0.0;  // point mass at zero additions

  const double log_p = std::log(p);
  const double log_1p = std::log1p(-p);
  const double lg_n1 = std::lgamma(double(n) + 1.0);
  long long lo = i_lo, hi = i_hi;
  double lt_lo = detail::log_binomial_term(n, lo, lg_n1, log_p, log_1p);
  double lt_hi = detail::log_binomial_term(n, hi, lg_n1, log_p, log_1p);
  double sum = 0.0;
  // The terms rise toward the mode from both ends; merging the two runs
  // smallest-first keeps the accumulation order by increasing magnitude.
  while (lo <= hi) {
    if (lo == hi) {
      sum += std::exp(lt_lo);
      break;
    }
    if (lt_lo <= lt_hi) {
      sum += std::exp(lt_lo);
      ++lo;
      lt_lo = detail::log_binomial_term(n, lo, lg_n1, log_p, log_1p);
    } else {
      sum += std::exp(lt_hi);
      --hi;
      lt_hi = detail::log_binomial_term(n, hi, lg_n1, log_p, log_1p);
    }
  }
  return std::min(sum, 1.0);
}

// Two-sided tail bound: 1 - exp(-n*D[(p-eps)/(1+eps), p]) - exp(-n*D[(p+eps)/(1-eps), p]).
// Valid for eps in (0, 1/3], p in [eps, 1-2*eps]; n may be any real >= 1 so
// root finders can treat it as continuous. Strictly increasing in eps and n.
inline double bound_b1(const RescaledPoint& pt, double n) {
  const double p = pt.p, eps = pt.eps;
  if (!(n >= 1.0)) throw std::domain_error("bound_b1: n must be >= 1");
  if (!(eps > 0.0 && eps <= 1.0 / 3.0 + detail::kDomainSlack)) {
    throw std::domain_error("bound_b1: eps " + std::to_string(eps) + " outside (0, 1/3]");
  }
  if (!(p >= eps - detail::kDomainSlack && p <= 1.0 - 2.0 * eps + detail::kDomainSlack)) {
    throw std::domain_error("bound_b1: p " + std::to_string(p) + " outside [eps, 1-2*eps]");
  }
  const double x_low = std::max((p - eps) / (1.0 + eps), 0.0);
  const double x_high = std::min((p + eps) / (1.0 - eps), 1.0);
  return 1.0 - std::exp(-n * kl_divergence(x_low, p)) - std::exp(-n * kl_divergence(x_high, p));
}

// One-sided tail bound: 1 - exp(-n*D[(p-eps)/(1+eps), p]) for
// p >= max(eps, 1-2*eps). Dominates bound_b1 wherever both apply.
inline double bound_b2(const RescaledPoint& pt, double n) {
  const double p = pt.p, eps = pt.eps;
  if (!(n >= 1.0)) throw std::domain_error("bound_b2: n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::domain_error("bound_b2: eps " + std::to_string(eps) + " outside (0,1)");
  }
  if (!(p < 1.0 && p >= std::max(eps, 1.0 - 2.0 * eps) - detail::kDomainSlack)) {
    throw std::domain_error("bound_b2: p " + std::to_string(p) +
                            " outside [max(eps, 1-2*eps), 1)");
  }
  const double x_low = std::max((p - eps) / (1.0 + eps), 0.0);
  return 1.0 - std::exp(-n * kl_divergence(x_low, p));
}

// Value of bound_b1 at the eps -> p limit; strictly increasing on (0, 1/3).
inline double threshold_h1(double p, long long n0) {
  if (n0 < 1) throw std::domain_error("threshold_h1: n0 must be positive");
  if (!(p > 0.0 && p < 1.0 / 3.0)) {
    throw std::domain_error("threshold_h1: p " + std::to_string(p) + " outside (0, 1/3)");
  }
  const double x = 2.0 * p / (1.0 - p);
  return 1.0 - std::pow(1.0 - p, double(n0)) - std::exp(-double(n0) * kl_divergence(x, p));
}

// Left and right limits of the piecewise bound at its eps = (1-p)/2 split;
// h2 < h3 everywhere, both strictly decreasing on (1/3, 1).
inline double threshold_h2(double p, long long n0) {
  if (n0 < 1) throw std::domain_error("threshold_h2: n0 must be positive");
  if (!(p > 1.0 / 3.0 && p < 1.0)) {
    throw std::domain_error("threshold_h2: p " + std::to_string(p) + " outside (1/3, 1)");
  }
  const double x = (3.0 * p - 1.0) / (3.0 - p);
  return 1.0 - std::exp(-double(n0) * kl_divergence(x, p)) - std::pow(p, double(n0));
}

inline double threshold_h3(double p, long long n0) {
  if (n0 < 1) throw std::domain_error("threshold_h3: n0 must be positive");
  if (!(p > 1.0 / 3.0 && p < 1.0)) {
    throw std::domain_error("threshold_h3: p " + std::to_string(p) + " outside (1/3, 1)");
  }
  const double x = (3.0 * p - 1.0) / (3.0 - p);
  return 1.0 - std::exp(-double(n0) * kl_divergence(x, p));
}

// g(n) = 1 - (2/3)^n - (1/3)^n; the feasibility gate for the fixed-n tuning
// scenario. Strictly increasing, g(1) = 0, g(n) < 1 for all finite n.
inline double feasibility_g(long long n) {
  if (n < 1) throw std::domain_error("feasibility_g: n must be positive");
  if (n <= 30) {
    // (2^n + 1)/3^n with exactly representable integers, so g(1) is 0 exactly.
    return 1.0 - (std::pow(2.0, double(n)) + 1.0) / std::pow(3.0, double(n));
  }
  return 1.0 - std::pow(2.0 / 3.0, double(n)) - std::pow(1.0 / 3.0, double(n));
}

// The unique real n with bound_b2(p, eps0, n) = P0:
// n2(p) = -ln(1-P0) / D[(p-eps0)/(1+eps0), p].
inline double n2_explicit(double p, double eps0, double min_probability) {
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw std::domain_error("n2_explicit: eps0 outside (0,1)");
  if (!(min_probability > 0.0 && min_probability < 1.0)) {
    throw std::domain_error("n2_explicit: probability threshold outside (0,1)");
  }
  if (!(p > eps0 && p < 1.0)) {
    throw std::domain_error("n2_explicit: p " + std::to_string(p) + " outside (eps0, 1)");
  }
  return -std::log1p(-min_probability) /
         kl_divergence((p - eps0) / (1.0 + eps0), p);
}

// Power-law (one-sided Chebyshev) estimate of the minimum node count; weaker
// than the exponential bounds but cheap, so it serves as the search ceiling.
inline long long chebyshev_min_n(double eps0, double min_probability) {
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw std::domain_error("chebyshev_min_n: eps0 outside (0,1)");
  if (!(min_probability > 0.0 && min_probability < 1.0)) {
    throw std::domain_error("chebyshev_min_n: probability threshold outside (0,1)");
  }
  const double p0 = min_probability;
  double value;
  if (eps0 < 1.0 / 3.0) {
    const double e2 = eps0 * eps0;
    const double first = (p0 * (1.0 + e2) + std::sqrt((1.0 - e2) * (1.0 - e2) +
                                                      4.0 * p0 * p0 * e2)) /
                         (8.0 * e2 * (1.0 - p0));
    const double second = p0 / (1.0 - p0) * ((1.0 - 2.0 * eps0) * (1.0 + eps0) * (1.0 + eps0)) /
                          (2.0 * eps0 * (1.0 - eps0) * (1.0 - eps0));
    value = std::max(first, second);
  } else {
    value = p0 / (1.0 - p0) * (1.0 - eps0) / eps0;
  }
  return std::max<long long>(1, static_cast<long long>(detail::ceil_snapped(value)));
}

enum class BoundKind { b1, b2, none };

// Exact probability plus whichever exponential lower bound applies at the
// rescaled point (there may be none at the domain corner).
struct CorrectnessEvaluation {
  std::optional<double> exact;
  std::optional<double> chernoff_lower;
  BoundKind which_bound = BoundKind::none;
};

inline CorrectnessEvaluation evaluate_correctness(double load, const ScalingPolicy& policy,
                                                  long long n) {
  CorrectnessEvaluation out;
  out.exact = binomial_correctness(load, policy, n);
  const RescaledPoint pt = rescale(load, policy);
  const double s = detail::kDomainSlack;
  if (pt.eps <= 1.0 / 3.0 + s && pt.p >= pt.eps - s && pt.p <= 1.0 - 2.0 * pt.eps + s) {
    out.chernoff_lower = bound_b1(pt, double(n));
    out.which_bound = BoundKind::b1;
  } else if (pt.p < 1.0 && pt.p >= std::max(pt.eps, 1.0 - 2.0 * pt.eps) - s) {
    out.chernoff_lower = bound_b2(pt, double(n));
    out.which_bound = BoundKind::b2;
  }
  return out;
}

}  // namespace depas
