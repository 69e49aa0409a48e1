#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "evload/dynamics.hpp"

using namespace evload;
using Catch::Approx;

namespace {

std::mt19937_64 test_rng(99);

double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(test_rng);
}

ProblemInstance single_station(double r = 1.0, double c = 50.0, double T = 60.0) {
  return make_instance(Vec{c}, Matrix::from_rows({{0.0}}), T, 1e-3,
                       InelasticDemand{Vec{r}});
}

ProblemInstance example1(double r = 0.5) {
  return make_instance(Vec{20.0, 40.0}, Matrix::from_rows({{1.0, 10.0}}), 60.0, 1e-3,
                       InelasticDemand{Vec{r}});
}

// Three stations, four sites; moderate smoothing keeps the field gentle.
ProblemInstance desk_instance() {
  return make_instance(
      Vec{6.0, 9.0, 5.0},
      Matrix::from_rows({{1.0, 5.0, 9.0}, {4.0, 2.0, 6.0}, {8.0, 3.0, 2.0}, {5.0, 6.0, 1.0}}),
      30.0, 0.5, InelasticDemand{Vec{0.3, 0.25, 0.2, 0.25}});
}

}  // namespace

TEST_CASE("field: inflow minus q/T, linear for a lone station") {
  const auto inst = single_station();
  // delta = 1 identically, so f(q) = r - q/T
  CHECK(field(Vec{0.0}, inst)[0] == Approx(1.0));
  CHECK(field(Vec{30.0}, inst)[0] == Approx(1.0 - 30.0 / 60.0).epsilon(1e-13));
  CHECK(field(Vec{120.0}, inst)[0] == Approx(1.0 - 2.0).epsilon(1e-13));
}

TEST_CASE("field vanishes at the solved equilibrium") {
  const auto inst = example1();
  // near-hard-min: the field amplifies multiplier error by ~1/eps, so the
  // 1e-6 bound needs the multipliers a few orders tighter than that
  SolverConfig cfg;
  cfg.grad_tol = 1e-13;
  const auto sol = solve_equilibrium(inst, cfg);
  const Vec f = field(sol.q, inst);
  for (double fj : f) CHECK(std::abs(fj) <= 1e-6);
}

TEST_CASE("field at the empty state is pure inflow") {
  const auto inst = desk_instance();
  const Vec f = field(Vec(3, 0.0), inst);
  double total = 0.0;
  for (double fj : f) {
    CHECK(fj > 0.0);
    total += fj;
  }
  CHECK(total == Approx(1.0).epsilon(1e-12));  // sum of site rates
}

TEST_CASE("integrate: exact linear solution for the lone station") {
  const auto inst = single_station();
  const Trajectory traj = integrate(Vec{0.0}, 120.0, 0.1, inst);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    if (t == 30.0 || t == 60.0 || t == 120.0) {
      const double exact = 60.0 * (1.0 - std::exp(-t / 60.0));
      CHECK(traj.states[k][0] == Approx(exact).margin(1e-6));
    }
  }
  CHECK(traj.times.back() == Approx(120.0));
}

TEST_CASE("integrate: equilibrium start stays put") {
  // moderate smoothing: the field's local Jacobian stays O(1/T) and the
  // default-scale step is well inside RK4's stability region
  const auto inst = desk_instance();
  SolverConfig cfg;
  cfg.grad_tol = 1e-12;
  const auto sol = solve_equilibrium(inst, cfg);
  const Trajectory traj = integrate(sol.q, 600.0, 0.05, inst, 100);
  for (const auto& q : traj.states)
    for (std::size_t j = 0; j < q.size(); ++j)
      CHECK(q[j] == Approx(sol.q[j]).margin(1e-8));
}

TEST_CASE("integrate validates inputs and rejects bad states") {
  const auto inst = single_station();
  CHECK_THROWS_AS(integrate(Vec{-1.0}, 10.0, 0.1, inst), std::invalid_argument);
  CHECK_THROWS_AS(integrate(Vec{0.0}, 10.0, 0.0, inst), std::invalid_argument);
  CHECK_THROWS_AS(integrate(Vec{0.0}, 0.05, 0.1, inst), std::invalid_argument);
  CHECK_THROWS_AS(integrate(Vec{0.0, 0.0}, 10.0, 0.1, inst), std::invalid_argument);
}

TEST_CASE("trajectories stay inside the invariant box [0, rT]^n") {
  const auto inst = desk_instance();
  const double rT = inst.total_max_rate() * inst.sojourn_min;  // = 30
  for (int rep = 0; rep < 5; ++rep) {
    Vec q0(3);
    for (auto& v : q0) v = uniform(0.0, rT);
    const Trajectory traj = integrate(q0, 20.0 * inst.sojourn_min, 0.05, inst, 50);
    for (const auto& q : traj.states)
      for (double qj : q) {
        CHECK(qj >= -1e-12);
        CHECK(qj <= rT + 1e-9);
      }
  }
}

TEST_CASE("step halving moves the endpoint by less than 1e-6") {
  const auto inst = desk_instance();
  const Vec q0(3, 0.0);
  const double horizon = 10.0 * inst.sojourn_min;
  const Trajectory coarse = integrate(q0, horizon, 0.1, inst, 1u << 20);
  const Trajectory fine = integrate(q0, horizon, 0.05, inst, 1u << 20);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(coarse.states.back()[j] == Approx(fine.states.back()[j]).margin(1e-6));
}

TEST_CASE("equilibrium attraction from random starts on a desk instance") {
  const auto inst = desk_instance();
  const auto sol = solve_equilibrium(inst);
  const double rT = inst.total_max_rate() * inst.sojourn_min;
  const double horizon = 40.0 * inst.sojourn_min;
  const double step = inst.sojourn_min / 600.0;
  for (int rep = 0; rep < 20; ++rep) {
    Vec q0(3);
    for (auto& v : q0) v = uniform(0.0, rT);
    const Trajectory traj = integrate(q0, horizon, step, inst, 1u << 20);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(traj.states.back()[j] == Approx(sol.q[j]).margin(1e-3));
  }
}

TEST_CASE("queue mass balances total demand at equilibrium") {
  const auto inst = desk_instance();
  const auto sol = solve_equilibrium(inst);
  double mass = 0.0;
  for (double qj : sol.q) mass += qj;
  double rate = 0.0;
  for (double ri : sol.rates) rate += ri;
  CHECK(mass == Approx(inst.sojourn_min * rate).margin(1e-6));
}

TEST_CASE("lyapunov series: flat at equilibrium, monotone from empty") {
  const auto smooth = desk_instance();
  SolverConfig cfg;
  cfg.grad_tol = 1e-12;
  const auto sol_s = solve_equilibrium(smooth, cfg);
  const Trajectory at_eq = integrate(sol_s.q, 60.0, 0.05, smooth, 10);
  const auto rep_eq = lyapunov_series(at_eq, smooth);
  CHECK(rep_eq.pass);
  for (std::size_t k = 0; k + 1 < rep_eq.series.size(); ++k)
    CHECK(std::abs(rep_eq.series[k + 1] - rep_eq.series[k]) <= 1e-10);

  // the near-hard-min toy needs a step under the stiff-zone stability bound
  const auto inst = example1();
  const auto sol = solve_equilibrium(inst);
  const Trajectory from_zero = integrate(Vec(2, 0.0), 40.0 * 60.0, 0.01, inst, 1000);
  const auto rep0 = lyapunov_series(from_zero, inst);
  CHECK(rep0.pass);
  CHECK(rep0.series.back() == Approx(sol.dual_value).margin(1e-4));
}

TEST_CASE("elastic dynamics: dual series climbs to the elastic optimum") {
  const auto el = make_instance(Vec{50.0}, Matrix::from_rows({{0.0}}), 60.0, 1e-3,
                                ElasticDemand{Vec{2.0}, {UniformPatience{60.0}}});
  const auto sol = solve_equilibrium(el);
  const Trajectory traj = integrate(Vec{0.0}, 40.0 * 60.0, 0.1, el, 100);
  const auto rep = lyapunov_series(traj, el);
  CHECK(rep.pass);
  CHECK(rep.series.back() == Approx(sol.dual_value).margin(1e-4));
  CHECK(traj.states.back()[0] == Approx(sol.q[0]).margin(1e-3));
}
