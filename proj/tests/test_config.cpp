#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evload/config.hpp"
#include "evload/csv.hpp"

using namespace evload;
using Catch::Approx;
using nlohmann::json;

namespace {

json minimal_sites_doc() {
  return json::parse(R"({
    "stations": [{"x": 1.0, "y": 0.0, "capacity": 20.0},
                 {"x": 10.0, "y": 0.0, "capacity": 40.0}],
    "sites": [{"x": 0.0, "y": 0.0, "rate": 0.5}],
    "params": {"T_min": 60.0, "epsilon_min": 0.001},
    "demand": {"type": "inelastic"}
  })");
}

json minimal_region_doc() {
  return json::parse(R"({
    "stations": [{"x": 30.0, "y": 30.0, "capacity": 50.0}],
    "region": {"side": 60.0, "grid": 4, "crossing_time_min": 30.0},
    "params": {"T_min": 90.0, "epsilon_min": 0.5},
    "demand": {"type": "inelastic", "r_total": 2.0}
  })");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sites-based config turns coordinates into travel minutes") {
  const RunConfig rc = parse_run_config(minimal_sites_doc());
  REQUIRE(rc.instance.n_sites == 1);
  REQUIRE(rc.instance.n_stations == 2);
  CHECK(rc.instance.travel_min(0, 0) == Approx(1.0));
  CHECK(rc.instance.travel_min(0, 1) == Approx(10.0));
  CHECK(rc.instance.inelastic_rates()[0] == Approx(0.5));
  CHECK(!rc.grid.has_value());
  // documented defaults
  CHECK(rc.ode_step_min == Approx(60.0 / 600.0));
  CHECK(rc.ode_horizon_min == Approx(40.0 * 60.0));
  CHECK(rc.solver.grad_tol == 1e-9);
  CHECK(rc.solver.max_iters == 100000);
}

TEST_CASE("region-based config builds the uniform grid") {
  const RunConfig rc = parse_run_config(minimal_region_doc());
  REQUIRE(rc.grid.has_value());
  CHECK(rc.instance.n_sites == 16);
  CHECK(rc.instance.inelastic_rates()[0] == Approx(2.0 / 16.0));
  CHECK(rc.sim.arrival_rate == Approx(2.0));
}

TEST_CASE("elastic configs default the patience bound to T") {
  auto doc = minimal_region_doc();
  doc["demand"] = {{"type", "elastic_uniform"}, {"rbar_total", 1.5}};
  const RunConfig rc = parse_run_config(doc);
  REQUIRE(rc.instance.elastic());
  const auto& dm = rc.instance.elastic_demand();
  CHECK(dm.max_rates[0] == Approx(1.5 / 16.0));
  CHECK(survivor(dm.patience[0], 45.0) == Approx(0.5));  // uniform on [0, 90]

  doc["demand"]["patience_Tmax_min"] = 45.0;
  const RunConfig rc2 = parse_run_config(doc);
  CHECK(survivor(rc2.instance.elastic_demand().patience[0], 45.0) == 0.0);
}

TEST_CASE("schema violations are rejected with specific messages") {
  // unknown top-level key
  auto doc = minimal_sites_doc();
  doc["extra"] = 1;
  CHECK_THROWS_WITH(parse_run_config(doc),
                    Catch::Matchers::ContainsSubstring("unknown key \"extra\""));

  // unknown nested key
  doc = minimal_sites_doc();
  doc["params"]["bogus"] = 2;
  CHECK_THROWS_WITH(parse_run_config(doc),
                    Catch::Matchers::ContainsSubstring("bogus"));

  // both region and sites
  doc = minimal_sites_doc();
  doc["region"] = {{"side", 10.0}, {"grid", 2}, {"crossing_time_min", 5.0}};
  CHECK_THROWS_AS(parse_run_config(doc), std::invalid_argument);

  // neither
  doc = minimal_sites_doc();
  doc.erase("sites");
  CHECK_THROWS_AS(parse_run_config(doc), std::invalid_argument);

  // missing required block
  doc = minimal_sites_doc();
  doc.erase("params");
  CHECK_THROWS_AS(parse_run_config(doc), std::invalid_argument);

  // r_total forbidden with explicit sites
  doc = minimal_sites_doc();
  doc["demand"]["r_total"] = 1.0;
  CHECK_THROWS_AS(parse_run_config(doc), std::invalid_argument);

  // region demand requires r_total
  doc = minimal_region_doc();
  doc["demand"].erase("r_total");
  CHECK_THROWS_AS(parse_run_config(doc), std::invalid_argument);

  // wrong demand type
  doc = minimal_sites_doc();
  doc["demand"]["type"] = "mystery";
  CHECK_THROWS_AS(parse_run_config(doc), std::invalid_argument);

  // non-numeric field
  doc = minimal_sites_doc();
  doc["params"]["T_min"] = "sixty";
  CHECK_THROWS_AS(parse_run_config(doc), std::invalid_argument);
}

TEST_CASE("option blocks override the defaults") {
  auto doc = minimal_sites_doc();
  doc["solver"] = {{"grad_tol", 1e-7}, {"max_iters", 500}};
  doc["ode"] = {{"step_min", 0.25}, {"horizon_min", 100.0}, {"stride", 4}};
  doc["sim"] = {{"seed", 99}, {"horizon_min", 300.0}, {"warmup_min", 50.0},
                {"stride_min", 5.0}};
  const RunConfig rc = parse_run_config(doc);
  CHECK(rc.solver.grad_tol == Approx(1e-7));
  CHECK(rc.solver.max_iters == 500);
  CHECK(rc.ode_step_min == Approx(0.25));
  CHECK(rc.ode_horizon_min == Approx(100.0));
  CHECK(rc.ode_stride == 4);
  CHECK(rc.sim.seed == 99);
  CHECK(rc.sim.horizon_min == Approx(300.0));
  CHECK(rc.sim.warmup_min == Approx(50.0));
  CHECK(rc.sim.sample_stride_min == Approx(5.0));
}

TEST_CASE("fmt9 prints nine significant digits in fixed form") {
  CHECK(fmt9(0.0) == "0");
  CHECK(fmt9(1.0 / 3.0) == "0.333333333");
  CHECK(fmt9(1234.56789012) == "1234.56789");
  CHECK(fmt9(-2.5e-7) == "-2.5e-07");
}

TEST_CASE("csv writers are deterministic and carry unit-annotated headers") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "evload_csv_test";
  fs::create_directories(dir);

  EquilibriumSolution sol;
  sol.mu = {9.0, 0.0};
  sol.x = Matrix::from_rows({{0.392156862, 0.107843137}});
  sol.q = {23.5294117, 6.47058823};
  sol.rates = {0.5};
  sol.dual_value = 1.25;
  sol.duality_gap = 1e-9;
  sol.kkt_residual = 2e-8;
  sol.iterations = 42;

  const auto path = (dir / "equilibrium.csv").string();
  write_equilibrium_csv(path, sol);
  const std::string first = read_file(path);
  write_equilibrium_csv(path, sol);
  CHECK(read_file(path) == first);
  CHECK(first.find("station,mu_star_min,q_star_ev,inflow_rate_ev_per_min") == 0);
  CHECK(first.find("9") != std::string::npos);

  write_certificate_csv((dir / "certificate.csv").string(), sol);
  const std::string cert = read_file((dir / "certificate.csv").string());
  CHECK(cert.find("dual_value,duality_gap,kkt_residual,iterations") == 0);
  CHECK(cert.find("42") != std::string::npos);
  fs::remove_all(dir);
}
