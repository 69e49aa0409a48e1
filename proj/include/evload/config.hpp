#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evload/equilibrium.hpp"
#include "evload/sim.hpp"
#include "evload/spatial.hpp"

namespace evload {

/// Everything a CLI run needs: the instance, optional grid geometry (only
/// region-based configs can be rasterized), and per-subsystem options with
/// defaults filled in.
struct RunConfig {
  ProblemInstance instance;
  std::optional<GridInstance> grid;
  SolverConfig solver;
  double ode_step_min = 0.0;     // 0 = default T/600
  double ode_horizon_min = 0.0;  // 0 = default 40*T
  std::size_t ode_stride = 1;    // record every k-th step
  SimConfig sim;
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

inline void require_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& required,
                         const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!required.count(item.key()) && !optional.count(item.key()))
      config_error("unknown key \"" + item.key() + "\" in " + where);
  }
  for (const auto& key : required)
    if (!obj.contains(key)) config_error(where + " is missing key \"" + key + "\"");
}

inline double number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) config_error(where + "." + key + " must be a number");
  return v.get<double>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& doc) {
  using detail::config_error;
  using detail::number;
  using detail::require_keys;

  require_keys(doc, "document", {"stations", "params", "demand"},
               {"region", "sites", "solver", "ode", "sim"});
  if (doc.contains("region") == doc.contains("sites"))
    config_error("exactly one of \"region\" or \"sites\" is required");

  // stations
  if (!doc.at("stations").is_array() || doc.at("stations").empty())
    config_error("\"stations\" must be a non-empty array");
  std::vector<Point> stations;
  Vec capacities;
  for (const auto& st : doc.at("stations")) {
    require_keys(st, "stations[]", {"x", "y", "capacity"});
    stations.push_back({number(st, "x", "stations[]"), number(st, "y", "stations[]")});
    capacities.push_back(number(st, "capacity", "stations[]"));
  }

  const auto& params = doc.at("params");
  require_keys(params, "params", {"T_min", "epsilon_min"});
  const double T = number(params, "T_min", "params");
  const double eps = number(params, "epsilon_min", "params");

  const auto& demand = doc.at("demand");
  if (!demand.is_object() || !demand.contains("type"))
    config_error("\"demand\" must be an object with a \"type\"");
  const std::string type = demand.at("type").get<std::string>();

  RunConfig rc;
  if (doc.contains("region")) {
    const auto& reg = doc.at("region");
    require_keys(reg, "region", {"side", "grid", "crossing_time_min"});
    Region region{number(reg, "side", "region"),
                  static_cast<std::size_t>(reg.at("grid").get<long long>()),
                  number(reg, "crossing_time_min", "region")};
    if (type == "inelastic") {
      require_keys(demand, "demand", {"type", "r_total"});
      rc.grid = build_grid_instance(region, stations, capacities,
                                    number(demand, "r_total", "demand"), T, eps);
    } else if (type == "elastic_uniform") {
      require_keys(demand, "demand", {"type", "rbar_total"}, {"patience_Tmax_min"});
      const double t_max = demand.contains("patience_Tmax_min")
                               ? number(demand, "patience_Tmax_min", "demand")
                               : T;
      rc.grid = build_grid_instance_elastic(region, stations, capacities,
                                            number(demand, "rbar_total", "demand"),
                                            T, eps, t_max);
    } else {
      config_error("demand.type must be \"inelastic\" or \"elastic_uniform\"");
    }
    rc.instance = rc.grid->problem;
  } else {
    // Explicit sites: coordinates are in travel-minutes (unit speed).
    if (!doc.at("sites").is_array() || doc.at("sites").empty())
      config_error("\"sites\" must be a non-empty array");
    std::vector<Point> sites;
    Vec rates;
    for (const auto& s : doc.at("sites")) {
      require_keys(s, "sites[]", {"x", "y", "rate"});
      sites.push_back({number(s, "x", "sites[]"), number(s, "y", "sites[]")});
      rates.push_back(number(s, "rate", "sites[]"));
    }
    Matrix kappa(sites.size(), stations.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = 0; j < stations.size(); ++j)
        kappa(i, j) = std::hypot(sites[i].x - stations[j].x, sites[i].y - stations[j].y);
    if (type == "inelastic") {
      require_keys(demand, "demand", {"type"});
      rc.instance = make_instance(capacities, std::move(kappa), T, eps,
                                  InelasticDemand{std::move(rates)});
    } else if (type == "elastic_uniform") {
      require_keys(demand, "demand", {"type"}, {"patience_Tmax_min"});
      const double t_max = demand.contains("patience_Tmax_min")
                               ? number(demand, "patience_Tmax_min", "demand")
                               : T;
      std::vector<PatienceDistribution> laws(rates.size(), UniformPatience{t_max});
      rc.instance = make_instance(capacities, std::move(kappa), T, eps,
                                  ElasticDemand{std::move(rates), std::move(laws)});
    } else {
      config_error("demand.type must be \"inelastic\" or \"elastic_uniform\"");
    }
  }

  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    require_keys(s, "solver", {}, {"grad_tol", "max_iters"});
    if (s.contains("grad_tol")) {
      rc.solver.grad_tol = number(s, "grad_tol", "solver");
      if (!(rc.solver.grad_tol > 0.0)) config_error("solver.grad_tol must be positive");
    }
    if (s.contains("max_iters"))
      rc.solver.max_iters = s.at("max_iters").get<std::size_t>();
  }

  rc.ode_step_min = rc.instance.sojourn_min / 600.0;
  rc.ode_horizon_min = 40.0 * rc.instance.sojourn_min;
  if (doc.contains("ode")) {
    const auto& o = doc.at("ode");
    require_keys(o, "ode", {}, {"step_min", "horizon_min", "stride"});
    if (o.contains("step_min")) rc.ode_step_min = number(o, "step_min", "ode");
    if (o.contains("horizon_min")) rc.ode_horizon_min = number(o, "horizon_min", "ode");
    if (o.contains("stride")) rc.ode_stride = o.at("stride").get<std::size_t>();
  }

  rc.sim.arrival_rate = rc.instance.elastic() ? 0.0 : rc.instance.total_max_rate();
  rc.sim.horizon_min = 100.0 * rc.instance.sojourn_min;
  rc.sim.warmup_min = 10.0 * rc.instance.sojourn_min;
  rc.sim.sample_stride_min = rc.instance.sojourn_min / 10.0;
  if (doc.contains("sim")) {
    const auto& s = doc.at("sim");
    require_keys(s, "sim", {}, {"seed", "horizon_min", "warmup_min", "stride_min", "arrival_rate"});
    if (s.contains("seed")) rc.sim.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("horizon_min")) rc.sim.horizon_min = number(s, "horizon_min", "sim");
    if (s.contains("warmup_min")) rc.sim.warmup_min = number(s, "warmup_min", "sim");
    if (s.contains("stride_min")) rc.sim.sample_stride_min = number(s, "stride_min", "sim");
    if (s.contains("arrival_rate")) rc.sim.arrival_rate = number(s, "arrival_rate", "sim");
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

}  // namespace evload
