#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

#include "evload/instance.hpp"
#include "evload/model.hpp"

namespace evload {

// Reproducibility contract: all randomness comes from std::mt19937_64
// engines (bit-specified by the C++ standard) on three named streams
// (arrivals, site draws, sojourns), each seeded with a splitmix64-mixed
// function of the user seed. Uniform and exponential variates are derived
// with explicit transforms rather than std distributions, whose output is
// implementation-defined.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return std::mt19937_64(splitmix64(seed + 0x100 * stream_id));
}

inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double exponential(std::mt19937_64& eng, double mean) {
  return -mean * std::log1p(-uniform01(eng));
}

constexpr std::uint64_t kArrivalStream = 1;
constexpr std::uint64_t kSiteStream = 2;
constexpr std::uint64_t kSojournStream = 3;

}  // namespace rng

struct SimConfig {
  std::uint64_t seed = 0;
  double horizon_min = 0.0;
  double warmup_min = 0.0;
  double arrival_rate = 0.0;      // EV/min total; 0 simulates an empty system
  double sample_stride_min = 0.0; // occupancy snapshot spacing
};

enum class EventKind : std::uint8_t { arrival, departure };

struct SimEvent {
  double t_min;
  EventKind kind;
  std::uint32_t site;
  std::uint32_t station;
};

struct Snapshot {
  double t_min;
  std::vector<std::int64_t> q;
};

struct EventLog {
  std::vector<SimEvent> events;
  std::vector<Snapshot> snapshots;
};

namespace detail {

inline void check_sim_config(const SimConfig& cfg) {
  if (!(cfg.warmup_min >= 0.0)) throw std::invalid_argument("sim: warmup must be >= 0");
  if (!(cfg.horizon_min > cfg.warmup_min))
    throw std::invalid_argument("sim: horizon must exceed warmup");
  if (!(cfg.sample_stride_min > 0.0))
    throw std::invalid_argument("sim: sample stride must be positive");
  if (!(cfg.arrival_rate >= 0.0))
    throw std::invalid_argument("sim: arrival rate must be >= 0");
}

// Hard-min station choice on the live integer occupancy, ties to the
// lowest station index.
inline std::uint32_t select_station(const ProblemInstance& inst, std::size_t site,
                                    const std::vector<std::int64_t>& q) {
  auto krow = inst.travel_min.row(site);
  std::uint32_t best = 0;
  double best_delay = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < inst.n_stations; ++j) {
    double mu = 0.0;
    const double qj = static_cast<double>(q[j]);
    if (qj > inst.capacities[j]) mu = inst.sojourn_min * (1.0 - inst.capacities[j] / qj);
    const double delay = krow[j] + mu;
    if (delay < best_delay) {
      best_delay = delay;
      best = static_cast<std::uint32_t>(j);
    }
  }
  return best;
}

}  // namespace detail

/// Discrete-event simulation of the stochastic system: Poisson arrivals of
/// total rate cfg.arrival_rate, site drawn with probability proportional to
/// the instance rates, hard-min station choice fed by the fluid delay
/// formula on the pre-arrival integer occupancy, and departure exactly at
/// arrival + Exp(T) regardless of service. Simultaneous events process
/// departures before arrivals, then in schedule order.
inline EventLog simulate(const ProblemInstance& inst, const SimConfig& cfg) {
  if (inst.elastic()) throw std::invalid_argument("sim: requires inelastic demand");
  detail::check_sim_config(cfg);

  const Vec& site_weights = inst.inelastic_rates();
  Vec cumulative(site_weights.size());
  double total_weight = 0.0;
  for (std::size_t i = 0; i < site_weights.size(); ++i) {
    total_weight += site_weights[i];
    cumulative[i] = total_weight;
  }

  auto arrivals = rng::make_stream(cfg.seed, rng::kArrivalStream);
  auto sites = rng::make_stream(cfg.seed, rng::kSiteStream);
  auto sojourns = rng::make_stream(cfg.seed, rng::kSojournStream);

  struct Departure {
    double t;
    std::uint64_t seq;
    std::uint32_t site;
    std::uint32_t station;
    bool operator>(const Departure& o) const {
      if (t != o.t) return t > o.t;
      return seq > o.seq;
    }
  };
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> pending;

  EventLog log;
  std::vector<std::int64_t> q(inst.n_stations, 0);
  std::uint64_t seq = 0;

  const double inf = std::numeric_limits<double>::infinity();
  double next_arrival = cfg.arrival_rate > 0.0
                            ? rng::exponential(arrivals, 1.0 / cfg.arrival_rate)
                            : inf;
  double next_snapshot = cfg.sample_stride_min;

  while (true) {
    const double t_dep = pending.empty() ? inf : pending.top().t;
    const double t_event = std::min(next_arrival, t_dep);

    // Snapshots cover state at times <= the next event.
    while (next_snapshot <= cfg.horizon_min && next_snapshot < t_event) {
      log.snapshots.push_back({next_snapshot, q});
      next_snapshot += cfg.sample_stride_min;
    }
    if (t_event > cfg.horizon_min) break;

    if (t_dep <= next_arrival) {  // departures first on ties
      const Departure d = pending.top();
      pending.pop();
      --q[d.station];
      log.events.push_back({d.t, EventKind::departure, d.site, d.station});
    } else {
      const double t = next_arrival;
      const double u = rng::uniform01(sites) * total_weight;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const auto site = static_cast<std::uint32_t>(
          std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1));
      const std::uint32_t station = detail::select_station(inst, site, q);
      ++q[station];
      log.events.push_back({t, EventKind::arrival, site, station});
      pending.push({t + rng::exponential(sojourns, inst.sojourn_min), seq++, site, station});
      next_arrival = t + rng::exponential(arrivals, 1.0 / cfg.arrival_rate);
    }
  }
  return log;
}

struct SimSummary {
  Vec mean_q;             // per-station time-average occupancy, post-warmup
  Vec mu_bar;             // per-station mean of T*[1 - c/q]^+ over samples
  double mean_total_q = 0.0;
  double var_total_q = 0.0;
  double r_effective = 0.0;      // post-warmup arrivals per minute
  double little_residual = 0.0;  // |mean_total - r_eff*T| / (r_nominal*T)
  Vec fluid_rel_err;      // |mean_q_j - q*_j| / q*_j when a reference is given
};

inline SimSummary summarize(const EventLog& log, const ProblemInstance& inst,
                            const SimConfig& cfg, const Vec* q_star = nullptr) {
  SimSummary s;
  s.mean_q.assign(inst.n_stations, 0.0);
  s.mu_bar.assign(inst.n_stations, 0.0);
  std::size_t count = 0;
  double total_sum = 0.0, total_sq = 0.0;
  for (const auto& snap : log.snapshots) {
    if (snap.t_min <= cfg.warmup_min) continue;
    ++count;
    double tot = 0.0;
    for (std::size_t j = 0; j < inst.n_stations; ++j) {
      const double qj = static_cast<double>(snap.q[j]);
      s.mean_q[j] += qj;
      if (qj > inst.capacities[j])
        s.mu_bar[j] += inst.sojourn_min * (1.0 - inst.capacities[j] / qj);
      tot += qj;
    }
    total_sum += tot;
    total_sq += tot * tot;
  }
  if (count == 0) throw std::invalid_argument("summarize: no post-warmup samples");
  for (std::size_t j = 0; j < inst.n_stations; ++j) {
    s.mean_q[j] /= static_cast<double>(count);
    s.mu_bar[j] /= static_cast<double>(count);
  }
  s.mean_total_q = total_sum / static_cast<double>(count);
  s.var_total_q = total_sq / static_cast<double>(count) - s.mean_total_q * s.mean_total_q;

  std::size_t post_arrivals = 0;
  for (const auto& ev : log.events)
    if (ev.kind == EventKind::arrival && ev.t_min > cfg.warmup_min) ++post_arrivals;
  const double window = cfg.horizon_min - cfg.warmup_min;
  s.r_effective = static_cast<double>(post_arrivals) / window;
  const double nominal = cfg.arrival_rate * inst.sojourn_min;
  s.little_residual = nominal > 0.0
                          ? std::abs(s.mean_total_q - s.r_effective * inst.sojourn_min) / nominal
                          : 0.0;

  if (q_star) {
    if (q_star->size() != inst.n_stations)
      throw std::invalid_argument("summarize: reference dimension mismatch");
    s.fluid_rel_err.resize(inst.n_stations);
    for (std::size_t j = 0; j < inst.n_stations; ++j)
      s.fluid_rel_err[j] = std::abs(s.mean_q[j] - (*q_star)[j]) / (*q_star)[j];
  }
  return s;
}

}  // namespace evload
