// Command-line front end: loads a JSON instance description, runs the
// requested computation, and writes CSV artifacts under --out-dir.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evload/evload.hpp"

namespace fs = std::filesystem;
using namespace evload;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

Vec read_state_file(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open state file: " + path);
  Vec q;
  double v;
  while (in >> v) q.push_back(v);
  if (q.size() != n)
    throw std::invalid_argument("state file holds " + std::to_string(q.size()) +
                                " values, expected " + std::to_string(n));
  return q;
}

void run_solve_eq(const std::string& config_path, const std::string& dir) {
  RunConfig rc = load_run_config(config_path);
  if (rc.instance.elastic())
    throw std::invalid_argument("solve-eq: config has elastic demand, use solve-elastic");
  const EquilibriumSolution sol = solve_equilibrium(rc.instance, rc.solver);
  write_equilibrium_csv(out_path(dir, "equilibrium.csv"), sol);
  write_certificate_csv(out_path(dir, "certificate.csv"), sol);
  std::cout << "equilibrium solved: dual=" << fmt9(sol.dual_value)
            << " gap=" << fmt9(sol.duality_gap) << " iters=" << sol.iterations << "\n";
}

void run_solve_elastic(const std::string& config_path, const std::string& dir) {
  RunConfig rc = load_run_config(config_path);
  if (!rc.instance.elastic())
    throw std::invalid_argument("solve-elastic: config has inelastic demand, use solve-eq");
  const EquilibriumSolution sol = solve_equilibrium(rc.instance, rc.solver);
  write_equilibrium_csv(out_path(dir, "equilibrium.csv"), sol);
  write_certificate_csv(out_path(dir, "certificate.csv"), sol);
  write_demand_csv(out_path(dir, "demand.csv"), sol, rc.instance);
  std::cout << "elastic equilibrium solved: dual=" << fmt9(sol.dual_value)
            << " gap=" << fmt9(sol.duality_gap) << " iters=" << sol.iterations << "\n";
}

void run_simulate_fluid(const std::string& config_path, const std::string& dir,
                        const std::string& q0_spec, double horizon, double step,
                        std::size_t stride) {
  RunConfig rc = load_run_config(config_path);
  if (horizon > 0.0) rc.ode_horizon_min = horizon;
  if (step > 0.0) rc.ode_step_min = step;
  if (stride > 0) rc.ode_stride = stride;

  Vec q0;
  if (q0_spec == "zeros") {
    q0.assign(rc.instance.n_stations, 0.0);
  } else if (q0_spec == "equilibrium") {
    q0 = solve_equilibrium(rc.instance, rc.solver).q;
  } else {
    q0 = read_state_file(q0_spec, rc.instance.n_stations);
  }

  const Trajectory traj = integrate(q0, rc.ode_horizon_min, rc.ode_step_min,
                                    rc.instance, rc.ode_stride);
  const MonotonicityReport rep = lyapunov_series(traj, rc.instance);
  write_trajectory_csv(out_path(dir, "trajectory.csv"), traj);
  write_monotonicity_csv(out_path(dir, "monotonicity.csv"), rep);
  std::cout << "integrated " << traj.times.size() << " samples to t="
            << fmt9(traj.times.back()) << "; dual monotone: " << (rep.pass ? "yes" : "NO")
            << "\n";
}

void run_social_opt(const std::string& config_path, const std::string& dir) {
  RunConfig rc = load_run_config(config_path);
  const SocialSolution sol = solve_social_optimum(rc.instance);
  write_social_csv(out_path(dir, "social.csv"), sol);
  std::cout << "social optimum: Cs=" << fmt9(sol.cost) << "\n";
}

void run_poa_sweep(const std::string& config_path, const std::string& dir,
                   double r_from, double r_to, std::size_t r_steps) {
  RunConfig rc = load_run_config(config_path);
  if (r_steps < 1) throw std::invalid_argument("poa-sweep: --r-steps must be >= 1");
  std::vector<double> r_values;
  for (std::size_t k = 0; k < r_steps; ++k)
    r_values.push_back(r_steps == 1
                           ? r_from
                           : r_from + (r_to - r_from) * static_cast<double>(k) /
                                 static_cast<double>(r_steps - 1));
  const auto rows = poa_sweep(rc.instance, r_values);
  write_poa_csv(out_path(dir, "poa.csv"), rows);
  std::cout << "swept " << rows.size() << " rates\n";
}

void run_simulate_stochastic(const std::string& config_path, const std::string& dir,
                             std::uint64_t seed, double horizon, double warmup,
                             double stride) {
  RunConfig rc = load_run_config(config_path);
  rc.sim.seed = seed;
  if (horizon > 0.0) rc.sim.horizon_min = horizon;
  if (warmup >= 0.0) rc.sim.warmup_min = warmup;
  if (stride > 0.0) rc.sim.sample_stride_min = stride;

  const EventLog log = simulate(rc.instance, rc.sim);
  const EquilibriumSolution eq = solve_equilibrium(rc.instance, rc.solver);
  const SimSummary summary = summarize(log, rc.instance, rc.sim, &eq.q);
  write_events_csv(out_path(dir, "events.csv"), log);
  write_occupancy_csv(out_path(dir, "occupancy.csv"), log, rc.instance.n_stations);
  write_summary_csv(out_path(dir, "summary.csv"), summary);
  std::cout << "simulated " << log.events.size() << " events; mean total occupancy "
            << fmt9(summary.mean_total_q) << "\n";
}

void run_regions(const std::string& config_path, const std::string& dir,
                 const std::string& mu_mode) {
  RunConfig rc = load_run_config(config_path);
  if (!rc.grid)
    throw std::invalid_argument("regions: config must be region-based to rasterize");
  Vec mu(rc.instance.n_stations, 0.0);
  if (mu_mode == "from-equilibrium")
    mu = solve_equilibrium(rc.instance, rc.solver).mu;
  else if (mu_mode != "zero")
    throw std::invalid_argument("regions: --mu must be from-equilibrium or zero");
  write_raster_csv(out_path(dir, "voronoi.csv"), *rc.grid, voronoi_raster(*rc.grid));
  write_raster_csv(out_path(dir, "attraction.csv"), *rc.grid,
                   attraction_raster(*rc.grid, mu));
  std::cout << "rasters written (" << rc.grid->region.grid << "x"
            << rc.grid->region.grid << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging load balancing: equilibria, fluid dynamics, "
               "social optimum, and stochastic validation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "./out";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "JSON instance description")->required();
    cmd->add_option("--out-dir", out_dir, "output directory (default ./out)");
  };

  auto* solve_eq = app.add_subcommand("solve-eq", "solve the selfish routing equilibrium");
  add_common(solve_eq);

  auto* solve_elastic =
      app.add_subcommand("solve-elastic", "solve the elastic-demand equilibrium");
  add_common(solve_elastic);

  std::string q0_spec = "zeros";
  double horizon = 0.0, step = 0.0;
  std::size_t stride = 0;
  auto* sim_fluid = app.add_subcommand("simulate-fluid", "integrate the fluid dynamics");
  add_common(sim_fluid);
  sim_fluid->add_option("--q0", q0_spec, "initial state: zeros | equilibrium | <file>");
  sim_fluid->add_option("--horizon", horizon, "horizon in minutes");
  sim_fluid->add_option("--step", step, "RK4 step in minutes");
  sim_fluid->add_option("--stride", stride, "record every k-th step");

  auto* social = app.add_subcommand("social-opt", "solve the social planner's assignment");
  add_common(social);

  double r_from = 0.0, r_to = 0.0;
  std::size_t r_steps = 0;
  auto* poa = app.add_subcommand("poa-sweep", "sweep demand and compare selfish vs optimal");
  add_common(poa);
  poa->add_option("--r-from", r_from, "first total rate")->required();
  poa->add_option("--r-to", r_to, "last total rate")->required();
  poa->add_option("--r-steps", r_steps, "number of rates")->required();

  std::uint64_t seed = 0;
  double sim_horizon = 0.0, sim_warmup = -1.0, sim_stride = 0.0;
  auto* sim_stoch = app.add_subcommand("simulate-stochastic",
                                       "discrete-event stochastic simulation");
  add_common(sim_stoch);
  sim_stoch->add_option("--seed", seed, "PRNG seed")->required();
  sim_stoch->add_option("--horizon", sim_horizon, "horizon in minutes");
  sim_stoch->add_option("--warmup", sim_warmup, "warmup in minutes");
  sim_stoch->add_option("--stride", sim_stride, "snapshot stride in minutes");

  std::string mu_mode = "from-equilibrium";
  auto* regions = app.add_subcommand("regions", "write Voronoi and attraction rasters");
  add_common(regions);
  regions->add_option("--mu", mu_mode, "delay vector: from-equilibrium | zero");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_eq->parsed()) run_solve_eq(config_path, out_dir);
    else if (solve_elastic->parsed()) run_solve_elastic(config_path, out_dir);
    else if (sim_fluid->parsed())
      run_simulate_fluid(config_path, out_dir, q0_spec, horizon, step, stride);
    else if (social->parsed()) run_social_opt(config_path, out_dir);
    else if (poa->parsed()) run_poa_sweep(config_path, out_dir, r_from, r_to, r_steps);
    else if (sim_stoch->parsed())
      run_simulate_stochastic(config_path, out_dir, seed, sim_horizon, sim_warmup, sim_stride);
    else if (regions->parsed()) run_regions(config_path, out_dir, mu_mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
