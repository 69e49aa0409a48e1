#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "evload/matrix.hpp"

namespace evload {

/// Willingness-to-wait law with survivor function p(tau) uniform on
/// [0, t_max]: p is continuous, nonincreasing, p(0) = 1 and p(tau) = 0 for
/// tau >= t_max. The matching utility is the saturating quadratic whose
/// marginal value U'(r) decreases linearly from t_max to 0 on [0, rbar].
struct UniformPatience {
  double t_max;  // minutes

  double survivor(double tau) const {
    if (tau <= 0.0) return 1.0;
    return std::max(0.0, 1.0 - tau / t_max);
  }

  double survivor_derivative(double tau) const {
    return tau < t_max ? -1.0 / t_max : 0.0;
  }

  double utility(double rate, double rbar) const {
    if (rate <= rbar) return t_max * rate * (1.0 - rate / (2.0 * rbar));
    return t_max * rbar / 2.0;  // satiation
  }

  // min_r [tau*r - U(r)]; nondecreasing, derivative rbar * p(tau).
  double conjugate(double tau, double rbar) const {
    if (tau >= t_max) return 0.0;
    const double slack = t_max - tau;
    return -rbar * slack * slack / (2.0 * t_max);
  }
};

using PatienceDistribution = std::variant<UniformPatience>;

inline double survivor(const PatienceDistribution& p, double tau) {
  return std::visit([&](const auto& d) { return d.survivor(tau); }, p);
}
inline double survivor_derivative(const PatienceDistribution& p, double tau) {
  return std::visit([&](const auto& d) { return d.survivor_derivative(tau); }, p);
}
inline double patience_utility(const PatienceDistribution& p, double rate, double rbar) {
  return std::visit([&](const auto& d) { return d.utility(rate, rbar); }, p);
}
inline double patience_conjugate(const PatienceDistribution& p, double tau, double rbar) {
  return std::visit([&](const auto& d) { return d.conjugate(tau, rbar); }, p);
}

struct InelasticDemand {
  Vec rates;  // EV/min per site, all > 0 after instance construction
};

struct ElasticDemand {
  Vec max_rates;  // rbar_i, EV/min per site
  std::vector<PatienceDistribution> patience;  // one law per site
};

using DemandModel = std::variant<InelasticDemand, ElasticDemand>;

inline bool is_elastic(const DemandModel& d) {
  return std::holds_alternative<ElasticDemand>(d);
}

}  // namespace evload
