#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "evload/instance.hpp"
#include "evload/softmin.hpp"

namespace evload {

/// Routing fractions: row i is the softmin-gradient distribution of the
/// total delays kappa_i + mu. Each row lies in the unit simplex.
inline Matrix routing_fractions(const Matrix& kappa, const Vec& mu, double eps) {
  if (kappa.cols() != mu.size())
    throw std::invalid_argument("routing_fractions: dimension mismatch");
  Matrix delta(kappa.rows(), kappa.cols());
  Vec y(kappa.cols());
  for (std::size_t i = 0; i < kappa.rows(); ++i) {
    auto krow = kappa.row(i);
    for (std::size_t j = 0; j < mu.size(); ++j) y[j] = krow[j] + mu[j];
    softmin_fractions(y, eps, delta.row(i));
  }
  return delta;
}

/// Queueing delay mu_j = T * max(0, 1 - c_j/q_j), the time for the excess
/// occupancy to clear at departure rate q/T. Ranges over [0, T); the empty
/// queue maps to 0 (limit of the positive part).
inline Vec waiting_time(const Vec& q, const Vec& capacities, double sojourn) {
  if (q.size() != capacities.size())
    throw std::invalid_argument("waiting_time: dimension mismatch");
  Vec mu(q.size(), 0.0);
  for (std::size_t j = 0; j < q.size(); ++j)
    if (q[j] > capacities[j]) mu[j] = sojourn * (1.0 - capacities[j] / q[j]);
  return mu;
}

/// Departure rate q/T (Little's-law form).
inline Vec departure_rate(const Vec& q, double sojourn) {
  Vec d(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) d[j] = q[j] / sojourn;
  return d;
}

/// Convex congestion penalty: the integral of mu(q)/T, zero up to capacity,
/// q - c - c*log(q/c) beyond it.
inline double barrier(double q, double c) {
  if (q <= c) return 0.0;
  return q - c - c * std::log(q / c);
}

/// Objective of the equilibrium program with explicit reference rates:
/// transport cost + barrier penalties + eps * sum x*log(x/r), with the
/// continuous extension 0*log(0) = 0.
inline double primal_cost(const Matrix& x, const Vec& q, const Matrix& kappa,
                          const Vec& capacities, double eps, const Vec& rates) {
  double cost = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double xij = x(i, j);
      cost += kappa(i, j) * xij;
      if (xij > 0.0) cost += eps * xij * std::log(xij / rates[i]);
    }
  for (std::size_t j = 0; j < q.size(); ++j) cost += barrier(q[j], capacities[j]);
  return cost;
}

inline double primal_cost(const Matrix& x, const Vec& q, const ProblemInstance& inst) {
  const Vec rates = inst.elastic() ? x.row_sums() : inst.inelastic_rates();
  return primal_cost(x, q, inst.travel_min, inst.capacities, inst.epsilon_min, rates);
}

/// Equilibrium-characterizing cost without the entropy perturbation:
/// transport plus barrier penalties.
inline double cost_C0(const Matrix& x, const Vec& q, const ProblemInstance& inst) {
  double cost = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) cost += inst.travel_min(i, j) * x(i, j);
  for (std::size_t j = 0; j < q.size(); ++j) cost += barrier(q[j], inst.capacities[j]);
  return cost;
}

/// Social welfare cost: transport plus the EVs actually waiting without a
/// slot, sum max(0, q_j - c_j). Always >= cost_C0; the excess is
/// sum c_j*log(q_j/c_j) over congested stations.
inline double cost_Cs(const Matrix& x, const Vec& q, const ProblemInstance& inst) {
  double cost = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) cost += inst.travel_min(i, j) * x(i, j);
  for (std::size_t j = 0; j < q.size(); ++j)
    cost += std::max(0.0, q[j] - inst.capacities[j]);
  return cost;
}

/// Thinned arrival rate rbar_i * p_i(tau) under elastic demand.
inline double elastic_rate(const ProblemInstance& inst, std::size_t site, double tau) {
  const auto& el = inst.elastic_demand();
  return el.max_rates[site] * survivor(el.patience[site], tau);
}

inline double utility(const ProblemInstance& inst, std::size_t site, double rate) {
  const auto& el = inst.elastic_demand();
  return patience_utility(el.patience[site], rate, el.max_rates[site]);
}

/// Fenchel conjugate min_r [tau*r - U(r)]; its derivative in tau is the
/// thinned rate rbar_i * p_i(tau).
inline double utility_conjugate(const ProblemInstance& inst, std::size_t site, double tau) {
  const auto& el = inst.elastic_demand();
  return patience_conjugate(el.patience[site], tau, el.max_rates[site]);
}

}  // namespace evload
