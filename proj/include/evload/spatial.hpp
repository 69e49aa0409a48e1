#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "evload/instance.hpp"

namespace evload {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Square service region discretized to a g x g grid of demand sites at the
/// cell centers. crossing_time_min fixes the travel speed: v = side / crossing.
struct Region {
  double side = 0.0;
  std::size_t grid = 0;
  double crossing_time_min = 0.0;
};

/// A ProblemInstance together with the geometry it was built from, so
/// rasters and simulators can map sites back to cells.
struct GridInstance {
  ProblemInstance problem;
  Region region;
  std::vector<Point> stations;

  std::size_t site_index(std::size_t ix, std::size_t iy) const {
    return iy * region.grid + ix;
  }
  Point cell_center(std::size_t ix, std::size_t iy) const {
    const double h = region.side / static_cast<double>(region.grid);
    return {(static_cast<double>(ix) + 0.5) * h, (static_cast<double>(iy) + 0.5) * h};
  }
};

namespace detail {

inline Matrix grid_travel_times(const Region& region, const std::vector<Point>& stations) {
  if (!(region.side > 0.0)) throw std::invalid_argument("region: side must be positive");
  if (region.grid < 1) throw std::invalid_argument("region: grid must be >= 1");
  if (!(region.crossing_time_min > 0.0))
    throw std::invalid_argument("region: crossing time must be positive");
  for (const auto& p : stations)
    if (p.x < 0.0 || p.x > region.side || p.y < 0.0 || p.y > region.side)
      throw std::invalid_argument("region: station outside region");
  const double speed = region.side / region.crossing_time_min;
  const std::size_t g = region.grid;
  const double h = region.side / static_cast<double>(g);
  Matrix kappa(g * g, stations.size());
  for (std::size_t iy = 0; iy < g; ++iy)
    for (std::size_t ix = 0; ix < g; ++ix) {
      const double cx = (static_cast<double>(ix) + 0.5) * h;
      const double cy = (static_cast<double>(iy) + 0.5) * h;
      for (std::size_t j = 0; j < stations.size(); ++j)
        kappa(iy * g + ix, j) = std::hypot(cx - stations[j].x, cy - stations[j].y) / speed;
    }
  return kappa;
}

}  // namespace detail

/// Uniform-demand grid instance: every cell center is a site with rate
/// total_rate / g^2 and Euclidean travel times scaled by the region speed.
inline GridInstance build_grid_instance(const Region& region,
                                        const std::vector<Point>& stations,
                                        Vec capacities, double total_rate,
                                        double sojourn_min, double epsilon_min) {
  if (!(total_rate > 0.0)) throw std::invalid_argument("grid: total rate must be positive");
  Matrix kappa = detail::grid_travel_times(region, stations);
  const double g2 = static_cast<double>(region.grid * region.grid);
  Vec rates(region.grid * region.grid, total_rate / g2);
  GridInstance gi;
  gi.problem = make_instance(std::move(capacities), std::move(kappa), sojourn_min,
                             epsilon_min, InelasticDemand{std::move(rates)});
  gi.region = region;
  gi.stations = stations;
  return gi;
}

/// Elastic variant: rbar_total spread uniformly, uniform patience on
/// [0, patience_t_max].
inline GridInstance build_grid_instance_elastic(const Region& region,
                                                const std::vector<Point>& stations,
                                                Vec capacities, double rbar_total,
                                                double sojourn_min, double epsilon_min,
                                                double patience_t_max) {
  if (!(rbar_total > 0.0)) throw std::invalid_argument("grid: total rate must be positive");
  if (!(patience_t_max > 0.0)) throw std::invalid_argument("grid: patience bound must be positive");
  Matrix kappa = detail::grid_travel_times(region, stations);
  const std::size_t m = region.grid * region.grid;
  Vec rbar(m, rbar_total / static_cast<double>(m));
  std::vector<PatienceDistribution> laws(m, UniformPatience{patience_t_max});
  GridInstance gi;
  gi.problem = make_instance(std::move(capacities), std::move(kappa), sojourn_min,
                             epsilon_min, ElasticDemand{std::move(rbar), std::move(laws)});
  gi.region = region;
  gi.stations = stations;
  return gi;
}

/// Cell-to-station assignment map. station[iy*g + ix] holds the winning
/// station index; mu records the delay vector the assignment used.
struct Raster {
  std::size_t grid = 0;
  std::vector<int> station;
  Vec mu;
};

/// argmin_j (kappa_ij + mu_j) per cell, ties to the lowest station index.
inline Raster attraction_raster(const GridInstance& gi, const Vec& mu) {
  const auto& inst = gi.problem;
  if (mu.size() != inst.n_stations)
    throw std::invalid_argument("raster: mu dimension mismatch");
  Raster r;
  r.grid = gi.region.grid;
  r.mu = mu;
  r.station.resize(inst.n_sites);
  for (std::size_t i = 0; i < inst.n_sites; ++i) {
    auto krow = inst.travel_min.row(i);
    int best = 0;
    double best_delay = krow[0] + mu[0];
    for (std::size_t j = 1; j < inst.n_stations; ++j) {
      const double d = krow[j] + mu[j];
      if (d < best_delay) {
        best_delay = d;
        best = static_cast<int>(j);
      }
    }
    r.station[i] = best;
  }
  return r;
}

/// Minimum-travel-time assignment (the Voronoi partition under the
/// region's uniform speed).
inline Raster voronoi_raster(const GridInstance& gi) {
  return attraction_raster(gi, Vec(gi.problem.n_stations, 0.0));
}

/// The repository's fixed five-station demo layout: a 100 x 100 region
/// crossed in 50 minutes, stations concentrated center-east so that load
/// is asymmetric, 50 slots each, total demand 3 EV/min against an overall
/// capacity of 250/T EV/min, and mean sojourn 90 min. Mirrors the scale of
/// a metropolitan charging scenario with overall congestion.
inline GridInstance five_station_demo(std::size_t grid = 40, double epsilon_min = 0.5) {
  const Region region{100.0, grid, 50.0};
  const std::vector<Point> stations = {
      {78.0, 50.0}, {40.0, 72.0}, {55.0, 25.0}, {22.0, 42.0}, {12.0, 12.0}};
  return build_grid_instance(region, stations, Vec(5, 50.0), 3.0, 90.0, epsilon_min);
}

}  // namespace evload
