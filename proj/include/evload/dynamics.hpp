#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "evload/equilibrium.hpp"

namespace evload {

/// Sampled closed-loop trajectory with the dual value monitored along it.
struct Trajectory {
  Vec times;                    // minutes, strictly increasing
  std::vector<Vec> states;      // q(t_k)
  std::vector<Vec> multipliers; // mu(q(t_k))
  Vec dual_values;              // D(mu(q(t_k))) or the elastic analogue
  std::vector<Vec> rates;       // aggregate arrival rate per station
};

/// Right-hand side of the closed loop: inflow through the delay-fed routing
/// fractions minus the q/T departures. Elastic demand thins the per-site
/// rates by p_i(softmin(kappa_i + mu)).
inline Vec field(const Vec& q, const ProblemInstance& inst) {
  if (q.size() != inst.n_stations) throw std::invalid_argument("field: dimension mismatch");
  const Vec mu = waiting_time(q, inst.capacities, inst.sojourn_min);
  const PrimalPoint p = recover_primal(mu, inst);
  Vec f = p.x.col_sums();
  for (std::size_t j = 0; j < q.size(); ++j) f[j] -= q[j] / inst.sojourn_min;
  return f;
}

/// Classical fixed-step RK4 on the closed-loop field. States are sampled
/// every `sample_every` steps (first and last always included). Roundoff
/// can push a coordinate slightly negative near q = 0; anything below
/// -1e-12 is treated as an integration failure rather than clamped away.
inline Trajectory integrate(const Vec& q0, double horizon, double step,
                            const ProblemInstance& inst, std::size_t sample_every = 1) {
  if (q0.size() != inst.n_stations) throw std::invalid_argument("integrate: q0 dimension mismatch");
  for (double v : q0)
    if (!(v >= 0.0)) throw std::invalid_argument("integrate: q0 must be nonnegative");
  if (!(step > 0.0)) throw std::invalid_argument("integrate: step must be positive");
  if (!(horizon >= step)) throw std::invalid_argument("integrate: horizon must be >= step");
  if (sample_every == 0) sample_every = 1;

  const std::size_t n = inst.n_stations;
  const auto n_steps = static_cast<std::size_t>(std::llround(horizon / step));

  Trajectory traj;
  auto record = [&](double t, const Vec& q) {
    const Vec mu = waiting_time(q, inst.capacities, inst.sojourn_min);
    const PrimalPoint p = recover_primal(mu, inst);
    traj.times.push_back(t);
    traj.states.push_back(q);
    traj.multipliers.push_back(mu);
    traj.dual_values.push_back(dual_value_for(mu, inst));
    traj.rates.push_back(p.x.col_sums());
  };

  Vec q = q0;
  record(0.0, q);

  Vec k1, k2, k3, k4, tmp(n);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    k1 = field(q, inst);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = q[j] + 0.5 * step * k1[j];
    k2 = field(tmp, inst);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = q[j] + 0.5 * step * k2[j];
    k3 = field(tmp, inst);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = q[j] + step * k3[j];
    k4 = field(tmp, inst);
    for (std::size_t j = 0; j < n; ++j) {
      q[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (!std::isfinite(q[j]))
        throw std::runtime_error("integrate: non-finite state at t=" +
                                 std::to_string(s * step) + ", station " + std::to_string(j));
      if (q[j] < 0.0) {
        if (q[j] < -1e-12)
          throw std::runtime_error("integrate: negative state " + std::to_string(q[j]) +
                                   " exceeds clamp budget at t=" + std::to_string(s * step));
        q[j] = 0.0;
      }
    }
    if (s % sample_every == 0 || s == n_steps) record(s * step, q);
  }
  return traj;
}

/// Monotonicity audit of the dual value along a trajectory. Each increment
/// is allowed a slack proportional to the local sample spacing,
/// tol = 1e-7 * (1 + |D|) * (dt / T), covering the integrator's local error
/// at the mu(q) kink.
struct MonotonicityReport {
  Vec series;                      // dual values along the trajectory
  double min_increment = 0.0;      // most negative observed increment
  double worst_violation = 0.0;    // max(0, -(increment + tol)), 0 if pass
  bool pass = true;
};

inline MonotonicityReport lyapunov_series(const Trajectory& traj, const ProblemInstance& inst) {
  if (traj.times.empty()) throw std::invalid_argument("lyapunov_series: empty trajectory");
  MonotonicityReport rep;
  rep.series.reserve(traj.states.size());
  for (const Vec& q : traj.states) {
    const Vec mu = waiting_time(q, inst.capacities, inst.sojourn_min);
    rep.series.push_back(dual_value_for(mu, inst));
  }
  for (std::size_t k = 0; k + 1 < rep.series.size(); ++k) {
    const double inc = rep.series[k + 1] - rep.series[k];
    const double dt = traj.times[k + 1] - traj.times[k];
    const double tol = 1e-7 * (1.0 + std::abs(rep.series[k])) * (dt / inst.sojourn_min);
    rep.min_increment = std::min(rep.min_increment, inc);
    if (inc < -tol) {
      rep.pass = false;
      rep.worst_violation = std::max(rep.worst_violation, -(inc + tol));
    }
  }
  return rep;
}

}  // namespace evload
