#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evload/dynamics.hpp"
#include "evload/equilibrium.hpp"
#include "evload/sim.hpp"
#include "evload/social.hpp"
#include "evload/spatial.hpp"

namespace evload {

/// All floating output is printed at 9 significant digits in the C locale,
/// so identical runs produce byte-identical files.
inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

}  // namespace detail

inline void write_equilibrium_csv(const std::string& path, const EquilibriumSolution& sol) {
  auto out = detail::open_csv(path);
  out << "station,mu_star_min,q_star_ev,inflow_rate_ev_per_min\n";
  const Vec inflow = sol.x.col_sums();
  for (std::size_t j = 0; j < sol.mu.size(); ++j)
    out << j << ',' << fmt9(sol.mu[j]) << ',' << fmt9(sol.q[j]) << ','
        << fmt9(inflow[j]) << '\n';
}

inline void write_certificate_csv(const std::string& path, const EquilibriumSolution& sol) {
  auto out = detail::open_csv(path);
  out << "dual_value,duality_gap,kkt_residual,iterations\n";
  out << fmt9(sol.dual_value) << ',' << fmt9(sol.duality_gap) << ','
      << fmt9(sol.kkt_residual) << ',' << sol.iterations << '\n';
}

inline void write_demand_csv(const std::string& path, const EquilibriumSolution& sol,
                             const ProblemInstance& inst) {
  auto out = detail::open_csv(path);
  out << "site,r_star_ev_per_min,tau_star_min\n";
  for (std::size_t i = 0; i < inst.n_sites; ++i) {
    auto krow = inst.travel_min.row(i);
    Vec y(inst.n_stations);
    for (std::size_t j = 0; j < inst.n_stations; ++j) y[j] = krow[j] + sol.mu[j];
    out << i << ',' << fmt9(sol.rates[i]) << ',' << fmt9(softmin(y, inst.epsilon_min)) << '\n';
  }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_csv(path);
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  out << "t_min";
  for (std::size_t j = 0; j < n; ++j) out << ",q_" << (j + 1) << "_ev";
  for (std::size_t j = 0; j < n; ++j) out << ",mu_" << (j + 1) << "_min";
  out << ",dual_value\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << fmt9(traj.times[k]);
    for (std::size_t j = 0; j < n; ++j) out << ',' << fmt9(traj.states[k][j]);
    for (std::size_t j = 0; j < n; ++j) out << ',' << fmt9(traj.multipliers[k][j]);
    out << ',' << fmt9(traj.dual_values[k]) << '\n';
  }
}

inline void write_monotonicity_csv(const std::string& path, const MonotonicityReport& rep) {
  auto out = detail::open_csv(path);
  out << "samples,min_increment,worst_violation,pass\n";
  out << rep.series.size() << ',' << fmt9(rep.min_increment) << ','
      << fmt9(rep.worst_violation) << ',' << (rep.pass ? 1 : 0) << '\n';
}

/// Long-format table: record kind "x" rows carry (site, station, rate),
/// "q" rows (station, occupancy), one "cost" row with the optimal C_s.
inline void write_social_csv(const std::string& path, const SocialSolution& sol) {
  auto out = detail::open_csv(path);
  out << "record,i,j,value\n";
  for (std::size_t i = 0; i < sol.x.rows(); ++i)
    for (std::size_t j = 0; j < sol.x.cols(); ++j)
      out << "x," << i << ',' << j << ',' << fmt9(sol.x(i, j)) << '\n';
  for (std::size_t j = 0; j < sol.q.size(); ++j)
    out << "q,," << j << ',' << fmt9(sol.q[j]) << '\n';
  out << "cost,,," << fmt9(sol.cost) << '\n';
}

inline void write_poa_csv(const std::string& path, const std::vector<PoaRow>& rows) {
  auto out = detail::open_csv(path);
  out << "r_ev_per_min,C0_selfish_ev,Cs_selfish_ev,Cs_opt_ev,gap_ev\n";
  for (const auto& row : rows)
    out << fmt9(row.r) << ',' << fmt9(row.c0_selfish) << ',' << fmt9(row.cs_selfish)
        << ',' << fmt9(row.cs_opt) << ',' << fmt9(row.gap) << '\n';
}

inline void write_events_csv(const std::string& path, const EventLog& log) {
  auto out = detail::open_csv(path);
  out << "t_min,kind,site,station\n";
  for (const auto& ev : log.events)
    out << fmt9(ev.t_min) << ',' << (ev.kind == EventKind::arrival ? "arrival" : "departure")
        << ',' << ev.site << ',' << ev.station << '\n';
}

inline void write_occupancy_csv(const std::string& path, const EventLog& log,
                                std::size_t n_stations) {
  auto out = detail::open_csv(path);
  out << "t_min";
  for (std::size_t j = 0; j < n_stations; ++j) out << ",q_" << (j + 1) << "_ev";
  out << '\n';
  for (const auto& snap : log.snapshots) {
    out << fmt9(snap.t_min);
    for (auto qj : snap.q) out << ',' << qj;
    out << '\n';
  }
}

/// Long-format summary: per-station metrics carry the station index,
/// run-level metrics use station = -1.
inline void write_summary_csv(const std::string& path, const SimSummary& s) {
  auto out = detail::open_csv(path);
  out << "metric,station,value\n";
  for (std::size_t j = 0; j < s.mean_q.size(); ++j)
    out << "mean_q_ev," << j << ',' << fmt9(s.mean_q[j]) << '\n';
  for (std::size_t j = 0; j < s.mu_bar.size(); ++j)
    out << "mu_bar_min," << j << ',' << fmt9(s.mu_bar[j]) << '\n';
  for (std::size_t j = 0; j < s.fluid_rel_err.size(); ++j)
    out << "fluid_relative_error," << j << ',' << fmt9(s.fluid_rel_err[j]) << '\n';
  out << "mean_total_q_ev,-1," << fmt9(s.mean_total_q) << '\n';
  out << "var_total_q_ev2,-1," << fmt9(s.var_total_q) << '\n';
  out << "r_effective_ev_per_min,-1," << fmt9(s.r_effective) << '\n';
  out << "little_residual,-1," << fmt9(s.little_residual) << '\n';
}

inline void write_raster_csv(const std::string& path, const GridInstance& gi,
                             const Raster& raster) {
  auto out = detail::open_csv(path);
  out << "x_index,y_index,x_coord,y_coord,station_index\n";
  const std::size_t g = raster.grid;
  for (std::size_t iy = 0; iy < g; ++iy)
    for (std::size_t ix = 0; ix < g; ++ix) {
      const Point c = gi.cell_center(ix, iy);
      out << ix << ',' << iy << ',' << fmt9(c.x) << ',' << fmt9(c.y) << ','
          << raster.station[gi.site_index(ix, iy)] << '\n';
    }
}

}  // namespace evload
