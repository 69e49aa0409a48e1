#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "evload/sim.hpp"

using namespace evload;
using Catch::Approx;

namespace {

ProblemInstance single_station(double r = 0.5, double c = 1000.0, double T = 60.0) {
  return make_instance(Vec{c}, Matrix::from_rows({{0.0}}), T, 1e-3,
                       InelasticDemand{Vec{r}});
}

ProblemInstance two_station_congested() {
  return make_instance(Vec{5.0, 8.0}, Matrix::from_rows({{1.0, 6.0}, {4.0, 2.0}}),
                       30.0, 1e-3, InelasticDemand{Vec{0.4, 0.3}});
}

SimConfig config(std::uint64_t seed, double horizon, double warmup, double rate,
                 double stride) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.horizon_min = horizon;
  cfg.warmup_min = warmup;
  cfg.arrival_rate = rate;
  cfg.sample_stride_min = stride;
  return cfg;
}

bool logs_equal(const EventLog& a, const EventLog& b) {
  if (a.events.size() != b.events.size() || a.snapshots.size() != b.snapshots.size())
    return false;
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    if (a.events[k].t_min != b.events[k].t_min) return false;
    if (a.events[k].kind != b.events[k].kind) return false;
    if (a.events[k].site != b.events[k].site) return false;
    if (a.events[k].station != b.events[k].station) return false;
  }
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    if (a.snapshots[k].t_min != b.snapshots[k].t_min) return false;
    if (a.snapshots[k].q != b.snapshots[k].q) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("sim config validation") {
  const auto inst = single_station();
  CHECK_THROWS_AS(simulate(inst, config(1, 10.0, 20.0, 1.0, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(simulate(inst, config(1, 10.0, 0.0, 1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(simulate(inst, config(1, 10.0, 0.0, -1.0, 1.0)), std::invalid_argument);
  const auto elastic = make_instance(Vec{5.0}, Matrix::from_rows({{0.0}}), 60.0, 1.0,
                                     ElasticDemand{Vec{1.0}, {UniformPatience{60.0}}});
  CHECK_THROWS_AS(simulate(elastic, config(1, 10.0, 0.0, 1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("zero arrival rate gives an event-free log") {
  const auto log = simulate(single_station(), config(7, 50.0, 0.0, 0.0, 10.0));
  CHECK(log.events.empty());
  REQUIRE(log.snapshots.size() == 5);
  for (const auto& snap : log.snapshots)
    CHECK(snap.q == std::vector<std::int64_t>{0});
}

TEST_CASE("identical seeds reproduce the log exactly, different seeds do not") {
  const auto inst = two_station_congested();
  const auto cfg = config(123456789, 600.0, 0.0, 0.7, 10.0);
  const EventLog a = simulate(inst, cfg);
  const EventLog b = simulate(inst, cfg);
  CHECK(logs_equal(a, b));
  REQUIRE(!a.events.empty());

  auto cfg2 = cfg;
  cfg2.seed = 987654321;
  const EventLog c = simulate(inst, cfg2);
  CHECK(!logs_equal(a, c));
}

TEST_CASE("conservation: occupancy equals arrivals minus departures") {
  const auto inst = two_station_congested();
  const EventLog log = simulate(inst, config(42, 900.0, 0.0, 0.7, 7.5));
  std::size_t ev = 0;
  std::int64_t arrivals = 0, departures = 0;
  for (const auto& snap : log.snapshots) {
    while (ev < log.events.size() && log.events[ev].t_min < snap.t_min) {
      if (log.events[ev].kind == EventKind::arrival) ++arrivals;
      else ++departures;
      ++ev;
    }
    std::int64_t total = 0;
    for (auto qj : snap.q) total += qj;
    CHECK(total == arrivals - departures);
  }
  // departures never outrun arrivals within any (site, station) class
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> in_system;
  for (const auto& e : log.events) {
    auto& n = in_system[{e.site, e.station}];
    n += (e.kind == EventKind::arrival) ? 1 : -1;
    CHECK(n >= 0);
  }
}

TEST_CASE("replaying the log reproduces every hard-min routing decision") {
  const auto inst = two_station_congested();
  const EventLog log = simulate(inst, config(2024, 600.0, 0.0, 0.7, 50.0));
  std::vector<std::int64_t> q(inst.n_stations, 0);
  for (const auto& e : log.events) {
    if (e.kind == EventKind::arrival) {
      // recompute the choice from the pre-arrival occupancy
      std::uint32_t best = 0;
      double best_delay = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < inst.n_stations; ++j) {
        double mu = 0.0;
        const double qj = static_cast<double>(q[j]);
        if (qj > inst.capacities[j])
          mu = inst.sojourn_min * (1.0 - inst.capacities[j] / qj);
        const double delay = inst.travel_min(e.site, j) + mu;
        if (delay < best_delay) {
          best_delay = delay;
          best = static_cast<std::uint32_t>(j);
        }
      }
      CHECK(best == e.station);
      ++q[e.station];
    } else {
      --q[e.station];
    }
  }
}

TEST_CASE("interarrival and sojourn means match their targets within 3 SE") {
  const double r = 0.5, T = 60.0;
  const auto inst = single_station(r);
  const EventLog log = simulate(inst, config(5150, 200.0 * T, 0.0, r, 100.0));

  std::vector<double> arrival_times;
  for (const auto& e : log.events)
    if (e.kind == EventKind::arrival) arrival_times.push_back(e.t_min);
  REQUIRE(arrival_times.size() > 1000);
  double sum_gap = arrival_times.front();
  for (std::size_t k = 0; k + 1 < arrival_times.size(); ++k)
    sum_gap += arrival_times[k + 1] - arrival_times[k];
  const double n_gaps = static_cast<double>(arrival_times.size());
  const double mean_gap = sum_gap / n_gaps;
  const double se_gap = (1.0 / r) / std::sqrt(n_gaps);
  CHECK(std::abs(mean_gap - 1.0 / r) <= 3.0 * se_gap);

  // FIFO matching within the single class; the truncated tail is < 1% of
  // the sample, well inside the 3 SE band
  std::vector<double> pending;
  double sum_sojourn = 0.0;
  double n_sojourn = 0.0;
  std::size_t head = 0;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::arrival) {
      pending.push_back(e.t_min);
    } else {
      sum_sojourn += e.t_min - pending[head++];
      n_sojourn += 1.0;
    }
  }
  REQUIRE(n_sojourn > 1000.0);
  const double se_sojourn = T / std::sqrt(n_sojourn);
  CHECK(std::abs(sum_sojourn / n_sojourn - T) <= 3.0 * se_sojourn);
}

TEST_CASE("uncongested station: occupancy obeys Little's law from the log itself") {
  const double r = 0.5, T = 60.0;
  const auto inst = single_station(r);  // capacity far above the load
  const auto cfg = config(31415, 200.0 * T, 20.0 * T, r, T / 10.0);
  const EventLog log = simulate(inst, cfg);
  const SimSummary s = summarize(log, inst, cfg);
  CHECK(s.mean_total_q == Approx(r * T).epsilon(0.05));
  CHECK(s.little_residual <= 0.05);
  CHECK(s.mu_bar[0] == 0.0);  // never congested
}

TEST_CASE("summarize rejects an empty post-warmup window and checks references") {
  const auto inst = single_station();
  const auto cfg = config(1, 100.0, 0.0, 0.5, 10.0);
  const EventLog log = simulate(inst, cfg);
  auto late = cfg;
  late.warmup_min = 100.0;
  CHECK_THROWS_AS(summarize(log, inst, late), std::invalid_argument);

  const Vec q_star{30.0};
  const SimSummary s = summarize(log, inst, cfg, &q_star);
  REQUIRE(s.fluid_rel_err.size() == 1);
  CHECK(s.fluid_rel_err[0] == Approx(std::abs(s.mean_q[0] - 30.0) / 30.0));
  const Vec bad{1.0, 2.0};
  CHECK_THROWS_AS(summarize(log, inst, cfg, &bad), std::invalid_argument);
}
