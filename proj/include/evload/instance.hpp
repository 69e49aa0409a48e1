#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "evload/demand.hpp"
#include "evload/matrix.hpp"

namespace evload {

/// A charging problem: stations with capacities, demand sites with travel
/// times to every station, the common sojourn time T and the softmin
/// smoothing epsilon. Units are minutes and EV/min throughout.
///
/// Construct through make_instance(), which validates the data and drops
/// sites whose (maximal) rate is zero so that per-site entropy terms stay
/// well defined.
struct ProblemInstance {
  std::size_t n_sites = 0;
  std::size_t n_stations = 0;
  Vec capacities;       // c_j > 0, charging slots
  Matrix travel_min;    // kappa_ij >= 0, site-by-station, minutes
  double sojourn_min = 0.0;   // T > 0
  double epsilon_min = 0.0;   // softmin smoothing > 0
  DemandModel demand;

  bool elastic() const { return is_elastic(demand); }

  const Vec& inelastic_rates() const {
    const auto* d = std::get_if<InelasticDemand>(&demand);
    if (!d) throw std::invalid_argument("instance: wrong demand variant");
    return d->rates;
  }

  const ElasticDemand& elastic_demand() const {
    const auto* d = std::get_if<ElasticDemand>(&demand);
    if (!d) throw std::invalid_argument("instance: wrong demand variant");
    return *d;
  }

  /// Maximal per-site rates: r_i when inelastic, rbar_i when elastic.
  const Vec& max_rates() const {
    if (const auto* d = std::get_if<InelasticDemand>(&demand)) return d->rates;
    return std::get<ElasticDemand>(demand).max_rates;
  }

  double total_max_rate() const {
    double s = 0.0;
    for (double r : max_rates()) s += r;
    return s;
  }
};

inline ProblemInstance make_instance(Vec capacities, Matrix travel_min,
                                     double sojourn_min, double epsilon_min,
                                     DemandModel demand) {
  ProblemInstance inst;
  inst.n_stations = capacities.size();
  inst.n_sites = travel_min.rows();
  if (inst.n_stations == 0) throw std::invalid_argument("instance: no stations");
  if (travel_min.cols() != inst.n_stations)
    throw std::invalid_argument("instance: travel matrix has " +
                                std::to_string(travel_min.cols()) +
                                " columns, expected " + std::to_string(inst.n_stations));
  for (double c : capacities)
    if (!(c > 0.0)) throw std::invalid_argument("instance: capacities must be positive");
  for (std::size_t i = 0; i < travel_min.rows(); ++i)
    for (std::size_t j = 0; j < travel_min.cols(); ++j)
      if (!(travel_min(i, j) >= 0.0))
        throw std::invalid_argument("instance: travel times must be nonnegative");
  if (!(sojourn_min > 0.0)) throw std::invalid_argument("instance: sojourn_min must be positive");
  if (!(epsilon_min > 0.0)) throw std::invalid_argument("instance: epsilon_min must be positive");

  // Drop zero-rate sites up front; negative rates are rejected.
  const Vec* rates = nullptr;
  if (const auto* in = std::get_if<InelasticDemand>(&demand)) rates = &in->rates;
  else rates = &std::get<ElasticDemand>(demand).max_rates;
  if (rates->size() != inst.n_sites)
    throw std::invalid_argument("instance: demand rate count does not match site count");
  for (double r : *rates)
    if (!(r >= 0.0)) throw std::invalid_argument("instance: rates must be nonnegative");
  if (const auto* el = std::get_if<ElasticDemand>(&demand)) {
    if (el->patience.size() != inst.n_sites)
      throw std::invalid_argument("instance: patience law count does not match site count");
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < inst.n_sites; ++i)
    if ((*rates)[i] > 0.0) keep.push_back(i);
  if (keep.empty()) throw std::invalid_argument("instance: all sites have zero rate");

  if (keep.size() != inst.n_sites) {
    Matrix kept(keep.size(), inst.n_stations);
    for (std::size_t k = 0; k < keep.size(); ++k)
      for (std::size_t j = 0; j < inst.n_stations; ++j)
        kept(k, j) = travel_min(keep[k], j);
    travel_min = std::move(kept);
    if (auto* in = std::get_if<InelasticDemand>(&demand)) {
      Vec r2;
      for (auto i : keep) r2.push_back(in->rates[i]);
      in->rates = std::move(r2);
    } else {
      auto& el = std::get<ElasticDemand>(demand);
      Vec r2;
      std::vector<PatienceDistribution> p2;
      for (auto i : keep) {
        r2.push_back(el.max_rates[i]);
        p2.push_back(el.patience[i]);
      }
      el.max_rates = std::move(r2);
      el.patience = std::move(p2);
    }
    inst.n_sites = keep.size();
  }

  inst.capacities = std::move(capacities);
  inst.travel_min = std::move(travel_min);
  inst.sojourn_min = sojourn_min;
  inst.epsilon_min = epsilon_min;
  inst.demand = std::move(demand);
  return inst;
}

}  // namespace evload
