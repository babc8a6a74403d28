#pragma once

#include <stdexcept>
#include <string>

namespace depas {

// Target band for the average system load: keep it strictly inside
// (desired_load - delta, desired_load + delta). Loads are fractions of a
// single node's capacity, so desired_load lives in (0,1).
struct ScalingPolicy {
  double desired_load;  // L0
  double delta;         // half-width of the allowed variation interval

  ScalingPolicy(double desired_load_, double delta_)
      : desired_load(desired_load_), delta(delta_) {
    if (!(desired_load > 0.0 && desired_load < 1.0)) {
      throw std::domain_error("ScalingPolicy: desired load must lie in (0,1), got " +
                              std::to_string(desired_load));
    }
    if (!(delta > 0.0 && delta < desired_load)) {
      throw std::domain_error("ScalingPolicy: delta must lie in (0, desired_load), got " +
                              std::to_string(delta));
    }
  }

  double lower() const { return desired_load - delta; }
  double upper() const { return desired_load + delta; }

  // Band half-width rescaled by the desired load.
  double eps() const { return delta / desired_load; }

  // Strict inclusion; loads exactly on a bound count as outside.
  bool contains(double load) const { return load > lower() && load < upper(); }
};

// Load excess and band half-width rescaled by the desired load:
// p = (L - L0)/L0, eps = delta/L0. Every tail bound is expressed in these.
struct RescaledPoint {
  double p;
  double eps;
};

inline RescaledPoint rescale(double load, const ScalingPolicy& policy) {
  return RescaledPoint{(load - policy.desired_load) / policy.desired_load, policy.eps()};
}

}  // namespace depas
