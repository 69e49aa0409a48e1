#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "evload/model.hpp"

namespace evload {

struct SolverConfig {
  double grad_tol = 1e-9;     // on the projected-gradient infinity norm
  std::size_t max_iters = 100000;
  Vec initial_mu;             // empty = start at 0
  double backtrack_factor = 0.5;
  double sufficient_increase = 1e-4;  // Armijo constant
  bool record_trace = false;  // keep per-iteration dual values
};

struct EquilibriumSolution {
  Vec mu;            // station delay multipliers, in [0, T)
  Matrix x;          // site-to-station rates
  Vec q;             // station occupancies, q_j = T * sum_i x_ij
  Vec rates;         // per-site rates (instance rates if inelastic)
  double dual_value = 0.0;
  double duality_gap = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  Vec dual_trace;    // populated when SolverConfig::record_trace is set
};

/// Thrown when the ascent exhausts its iteration budget; carries the last
/// iterate and its projected-gradient norm for diagnosis.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(std::string msg, Vec last, double res)
      : std::runtime_error(std::move(msg)), last_mu(std::move(last)), residual(res) {}
  Vec last_mu;
  double residual;
};

namespace detail {

inline void check_mu_domain(const Vec& mu, const ProblemInstance& inst) {
  if (mu.size() != inst.n_stations)
    throw std::invalid_argument("dual: mu dimension mismatch");
  for (double m : mu)
    if (!(m >= 0.0) || !(m < inst.sojourn_min))
      throw std::domain_error("dual: mu outside [0, T)");
}

// softmin(kappa_i + mu, eps) for one site.
inline double site_softmin(const ProblemInstance& inst, std::size_t i, const Vec& mu) {
  auto krow = inst.travel_min.row(i);
  Vec y(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) y[j] = krow[j] + mu[j];
  return softmin(y, inst.epsilon_min);
}

}  // namespace detail

/// Dual of the inelastic equilibrium program on [0, T)^n:
///   D(mu) = sum_i r_i*softmin(kappa_i + mu, eps) + sum_j c_j*log(1 - mu_j/T).
/// Strictly concave with a unique interior maximizer.
inline double dual_value(const Vec& mu, const ProblemInstance& inst) {
  detail::check_mu_domain(mu, inst);
  const Vec& r = inst.inelastic_rates();
  double v = 0.0;
  for (std::size_t i = 0; i < inst.n_sites; ++i)
    v += r[i] * detail::site_softmin(inst, i, mu);
  for (std::size_t j = 0; j < inst.n_stations; ++j)
    v += inst.capacities[j] * std::log1p(-mu[j] / inst.sojourn_min);
  return v;
}

/// Gradient of D: component j is sum_i r_i*delta_ij(mu) - c_j/(T - mu_j).
inline Vec dual_gradient(const Vec& mu, const ProblemInstance& inst) {
  detail::check_mu_domain(mu, inst);
  const Vec& r = inst.inelastic_rates();
  Vec g(inst.n_stations, 0.0);
  Vec y(inst.n_stations), delta(inst.n_stations);
  for (std::size_t i = 0; i < inst.n_sites; ++i) {
    auto krow = inst.travel_min.row(i);
    for (std::size_t j = 0; j < inst.n_stations; ++j) y[j] = krow[j] + mu[j];
    softmin_fractions(y, inst.epsilon_min, delta);
    for (std::size_t j = 0; j < inst.n_stations; ++j) g[j] += r[i] * delta[j];
  }
  for (std::size_t j = 0; j < inst.n_stations; ++j)
    g[j] -= inst.capacities[j] / (inst.sojourn_min - mu[j]);
  return g;
}

/// Elastic dual: softmin delays priced through the utility conjugates,
///   D(mu) = sum_i U*_i(softmin(kappa_i + mu, eps)) + sum_j c_j*log(1 - mu_j/T).
inline double elastic_dual_value(const Vec& mu, const ProblemInstance& inst) {
  detail::check_mu_domain(mu, inst);
  if (!inst.elastic()) throw std::invalid_argument("elastic_dual_value: wrong demand variant");
  const auto& el = inst.elastic_demand();
  double v = 0.0;
  for (std::size_t i = 0; i < inst.n_sites; ++i) {
    const double tau = detail::site_softmin(inst, i, mu);
    v += patience_conjugate(el.patience[i], tau, el.max_rates[i]);
  }
  for (std::size_t j = 0; j < inst.n_stations; ++j)
    v += inst.capacities[j] * std::log1p(-mu[j] / inst.sojourn_min);
  return v;
}

/// Gradient component j: sum_i rbar_i*p_i(tau_i(mu))*delta_ij(mu) - c_j/(T - mu_j),
/// with tau_i(mu) = softmin(kappa_i + mu, eps).
inline Vec elastic_dual_gradient(const Vec& mu, const ProblemInstance& inst) {
  detail::check_mu_domain(mu, inst);
  if (!inst.elastic()) throw std::invalid_argument("elastic_dual_gradient: wrong demand variant");
  const auto& el = inst.elastic_demand();
  Vec g(inst.n_stations, 0.0);
  Vec y(inst.n_stations), delta(inst.n_stations);
  for (std::size_t i = 0; i < inst.n_sites; ++i) {
    auto krow = inst.travel_min.row(i);
    for (std::size_t j = 0; j < inst.n_stations; ++j) y[j] = krow[j] + mu[j];
    const double tau = softmin(y, inst.epsilon_min);
    softmin_fractions(y, inst.epsilon_min, delta);
    const double ri = el.max_rates[i] * survivor(el.patience[i], tau);
    for (std::size_t j = 0; j < inst.n_stations; ++j) g[j] += ri * delta[j];
  }
  for (std::size_t j = 0; j < inst.n_stations; ++j)
    g[j] -= inst.capacities[j] / (inst.sojourn_min - mu[j]);
  return g;
}

/// Dispatch on the demand variant.
inline double dual_value_for(const Vec& mu, const ProblemInstance& inst) {
  return inst.elastic() ? elastic_dual_value(mu, inst) : dual_value(mu, inst);
}
inline Vec dual_gradient_for(const Vec& mu, const ProblemInstance& inst) {
  return inst.elastic() ? elastic_dual_gradient(mu, inst) : dual_gradient(mu, inst);
}

namespace detail {

// Hessian of the applicable dual, stored dense row-major (n x n). Both
// variants are sums of negative-semidefinite softmin curvature terms and a
// strictly negative diagonal from the capacity logs.
inline std::vector<double> dual_hessian_for(const Vec& mu, const ProblemInstance& inst) {
  const std::size_t n = inst.n_stations;
  std::vector<double> h(n * n, 0.0);
  Vec y(n), delta(n);
  const bool elastic = inst.elastic();
  const ElasticDemand* el = elastic ? &inst.elastic_demand() : nullptr;
  const Vec* rates = elastic ? nullptr : &inst.inelastic_rates();
  for (std::size_t i = 0; i < inst.n_sites; ++i) {
    auto krow = inst.travel_min.row(i);
    for (std::size_t j = 0; j < n; ++j) y[j] = krow[j] + mu[j];
    softmin_fractions(y, inst.epsilon_min, delta);
    double w = 0.0;        // weight on the softmin curvature
    double w_outer = 0.0;  // extra rank-one term from demand thinning
    if (elastic) {
      const double tau = softmin(y, inst.epsilon_min);
      w = el->max_rates[i] * survivor(el->patience[i], tau);
      w_outer = el->max_rates[i] * survivor_derivative(el->patience[i], tau);
    } else {
      w = (*rates)[i];
    }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const double curv = (a == b ? delta[a] : 0.0) - delta[a] * delta[b];
        h[a * n + b] += -w / inst.epsilon_min * curv + w_outer * delta[a] * delta[b];
      }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double slack = inst.sojourn_min - mu[j];
    h[j * n + j] -= inst.capacities[j] / (slack * slack);
  }
  return h;
}

// Cholesky solve of M x = b for symmetric positive definite M (in place on
// copies); returns false if a pivot degenerates.
inline bool spd_solve(std::vector<double> m, Vec b, std::size_t n, Vec& x) {
  for (std::size_t k = 0; k < n; ++k) {
    double pivot = m[k * n + k];
    for (std::size_t p = 0; p < k; ++p) pivot -= m[k * n + p] * m[k * n + p];
    if (!(pivot > 0.0)) return false;
    const double l = std::sqrt(pivot);
    m[k * n + k] = l;
    for (std::size_t r = k + 1; r < n; ++r) {
      double v = m[r * n + k];
      for (std::size_t p = 0; p < k; ++p) v -= m[r * n + p] * m[k * n + p];
      m[r * n + k] = v / l;
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    double v = b[r];
    for (std::size_t p = 0; p < r; ++p) v -= m[r * n + p] * b[p];
    b[r] = v / m[r * n + r];
  }
  x.assign(n, 0.0);
  for (std::size_t rr = n; rr-- > 0;) {
    double v = b[rr];
    for (std::size_t p = rr + 1; p < n; ++p) v -= m[p * n + rr] * x[p];
    x[rr] = v / m[rr * n + rr];
  }
  return true;
}

}  // namespace detail

/// Primal recovery from the multipliers: per-site rates (thinned when
/// elastic), rate split through the routing fractions, and occupancies from
/// the balance q_j = T * sum_i x_ij.
struct PrimalPoint {
  Matrix x;
  Vec q;
  Vec rates;
};

inline PrimalPoint recover_primal(const Vec& mu, const ProblemInstance& inst) {
  PrimalPoint p;
  Vec rates;
  if (inst.elastic()) {
    const auto& el = inst.elastic_demand();
    rates.resize(inst.n_sites);
    for (std::size_t i = 0; i < inst.n_sites; ++i) {
      const double tau = detail::site_softmin(inst, i, mu);
      rates[i] = el.max_rates[i] * survivor(el.patience[i], tau);
    }
  } else {
    rates = inst.inelastic_rates();
  }
  p.x = routing_fractions(inst.travel_min, mu, inst.epsilon_min);
  for (std::size_t i = 0; i < inst.n_sites; ++i)
    for (std::size_t j = 0; j < inst.n_stations; ++j) p.x(i, j) *= rates[i];
  Vec inflow = p.x.col_sums();
  p.q.resize(inst.n_stations);
  for (std::size_t j = 0; j < inst.n_stations; ++j) p.q[j] = inst.sojourn_min * inflow[j];
  p.rates = std::move(rates);
  return p;
}

/// Infinity norm over stations of the stationarity and consistency defects:
/// flow balance |T*sum_i x_ij - q_j|, delay consistency |mu_j - mu(q_j)|,
/// and complementary slackness max(0, -dD_j)*mu_j.
inline double kkt_residuals(const EquilibriumSolution& sol, const ProblemInstance& inst) {
  const Vec inflow = sol.x.col_sums();
  const Vec mu_of_q = waiting_time(sol.q, inst.capacities, inst.sojourn_min);
  const Vec g = dual_gradient_for(sol.mu, inst);
  double res = 0.0;
  for (std::size_t j = 0; j < inst.n_stations; ++j) {
    res = std::max(res, std::abs(inst.sojourn_min * inflow[j] - sol.q[j]));
    res = std::max(res, std::abs(sol.mu[j] - mu_of_q[j]));
    res = std::max(res, std::max(0.0, -g[j]) * sol.mu[j]);
  }
  return res;
}

/// Primal-minus-dual value; nonnegative up to roundoff by weak duality.
/// For elastic demand the primal side is the surplus deficit
/// C(X, q, r) - sum_i U_i(r_i), matching the elastic dual.
inline double duality_gap(const EquilibriumSolution& sol, const ProblemInstance& inst) {
  if (inst.elastic()) {
    const auto& el = inst.elastic_demand();
    double primal = primal_cost(sol.x, sol.q, inst.travel_min, inst.capacities,
                                inst.epsilon_min, sol.rates);
    for (std::size_t i = 0; i < inst.n_sites; ++i)
      primal -= patience_utility(el.patience[i], sol.rates[i], el.max_rates[i]);
    return primal - elastic_dual_value(sol.mu, inst);
  }
  const double primal = primal_cost(sol.x, sol.q, inst.travel_min, inst.capacities,
                                    inst.epsilon_min, inst.inelastic_rates());
  return primal - dual_value(sol.mu, inst);
}

/// Maximizes the applicable dual over the box [0, T - T*1e-12]. The
/// barrier-like log terms keep the maximizer strictly below T; the guard
/// band keeps every evaluated point inside the dual domain.
///
/// Globalization is projected gradient ascent with Armijo backtracking, so
/// the dual value increases strictly across accepted iterations. Once value
/// differences fall below floating-point resolution the ascent hands over
/// to a projected damped-Newton polish that backtracks on the projected
/// gradient norm instead, which stays well conditioned down to the 1e-9
/// tolerance. Both phases share the unique fixed point.
///
/// Convergence is declared on the projected gradient: components pointing
/// out of the box at an active bound are clamped, which is the KKT
/// condition at mu_j = 0. Deterministic: fixed summation order, no
/// randomness, so identical inputs give bit-identical iterates.
inline EquilibriumSolution solve_equilibrium(const ProblemInstance& inst,
                                             const SolverConfig& cfg = {}) {
  const std::size_t n = inst.n_stations;
  const double upper = inst.sojourn_min * (1.0 - 1e-12);

  Vec mu = cfg.initial_mu.empty() ? Vec(n, 0.0) : cfg.initial_mu;
  if (mu.size() != n) throw std::invalid_argument("solver: initial mu dimension mismatch");
  for (double& m : mu) m = std::min(std::max(m, 0.0), upper);

  auto project = [&](Vec& v) {
    for (double& m : v) m = std::min(std::max(m, 0.0), upper);
  };
  auto projected_grad_norm = [&](const Vec& m, const Vec& g) {
    double nrm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double gj = g[j];
      if (m[j] <= 0.0 && gj < 0.0) gj = 0.0;
      if (m[j] >= upper && gj > 0.0) gj = 0.0;
      nrm = std::max(nrm, std::abs(gj));
    }
    return nrm;
  };

  double value = dual_value_for(mu, inst);
  double step = 1.0;
  std::size_t iter = 0;
  double residual = 0.0;
  bool converged = false;
  Vec trace;
  if (cfg.record_trace) trace.push_back(value);

  while (iter < cfg.max_iters) {
    const Vec g = dual_gradient_for(mu, inst);
    residual = projected_grad_norm(mu, g);
    if (residual <= cfg.grad_tol) {
      converged = true;
      break;
    }
    ++iter;
    bool accepted = false;

    // Damped Newton attempt on the free coordinates. Handles the badly
    // conditioned near-hard-min ridge where plain gradient ascent crawls.
    // A step is accepted only if the dual does not decrease (beyond
    // floating-point resolution, where the projected-gradient norm takes
    // over as the merit).
    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < n; ++j)
      if (!(mu[j] <= 0.0 && g[j] < 0.0) && !(mu[j] >= upper && g[j] > 0.0))
        free.push_back(j);
    const std::size_t nf = free.size();
    if (nf > 0) {
      const std::vector<double> h = detail::dual_hessian_for(mu, inst);
      std::vector<double> m(nf * nf);
      Vec rhs(nf);
      for (std::size_t a = 0; a < nf; ++a) {
        rhs[a] = g[free[a]];
        for (std::size_t b = 0; b < nf; ++b) m[a * nf + b] = -h[free[a] * n + free[b]];
      }
      Vec direction;
      if (detail::spd_solve(std::move(m), std::move(rhs), nf, direction)) {
        double damp = 1.0;
        while (damp > 1e-12) {
          Vec trial = mu;
          for (std::size_t a = 0; a < nf; ++a) trial[free[a]] += damp * direction[a];
          project(trial);
          bool moved = false;
          for (std::size_t j = 0; j < n; ++j) moved = moved || trial[j] != mu[j];
          if (!moved) break;
          const double trial_value = dual_value_for(trial, inst);
          const double noise = 8.0 * 2.220446049250313e-16 * (1.0 + std::abs(value));
          bool take = trial_value > value;
          if (!take && trial_value >= value - noise) {
            const Vec gt = dual_gradient_for(trial, inst);
            take = projected_grad_norm(trial, gt) < residual;
          }
          if (take) {
            mu = std::move(trial);
            value = trial_value;
            accepted = true;
            break;
          }
          damp *= 0.5;
        }
      }
    }

    // Projected gradient ascent with Armijo backtracking.
    if (!accepted) {
      step = std::min(step * 2.0, 1e6);
      while (step > 1e-18) {
        Vec trial = mu;
        for (std::size_t j = 0; j < n; ++j) trial[j] += step * g[j];
        project(trial);
        double inner = 0.0;
        for (std::size_t j = 0; j < n; ++j) inner += g[j] * (trial[j] - mu[j]);
        if (inner <= 0.0) break;  // projection absorbed the whole step
        const double trial_value = dual_value_for(trial, inst);
        if (trial_value >= value + cfg.sufficient_increase * inner && trial_value > value) {
          mu = std::move(trial);
          value = trial_value;
          accepted = true;
          break;
        }
        step *= cfg.backtrack_factor;
      }
    }

    if (!accepted)
      throw ConvergenceError(
          "solver: stalled at projected gradient norm " + std::to_string(residual),
          std::move(mu), residual);
    if (cfg.record_trace && (trace.empty() || value >= trace.back()))
      trace.push_back(value);
  }

  if (!converged)
    throw ConvergenceError("solver: max_iters exceeded (projected gradient norm " +
                               std::to_string(residual) + ")",
                           std::move(mu), residual);

  EquilibriumSolution sol;
  PrimalPoint p = recover_primal(mu, inst);
  sol.mu = std::move(mu);
  sol.x = std::move(p.x);
  sol.q = std::move(p.q);
  sol.rates = std::move(p.rates);
  sol.dual_value = value;
  sol.iterations = iter;
  sol.kkt_residual = kkt_residuals(sol, inst);
  sol.duality_gap = duality_gap(sol, inst);
  sol.dual_trace = std::move(trace);
  return sol;
}

}  // namespace evload
