#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evload/equilibrium.hpp"

namespace evload {

/// Bipartite assignment network for the social planner's program.
/// Node layout: 0 = source, 1..m = sites, m+1..m+n = stations, m+n+1 = sink.
/// Each station connects to the sink through two parallel arcs: capacity
/// c_j/T at cost 0 and unbounded capacity at cost T, which linearizes the
/// congestion penalty max(0, q_j - c_j) = T*max(0, sum_i x_ij - c_j/T).
struct FlowNetwork {
  struct Arc {
    int to;
    double cap;     // residual capacity
    double cost;
    int rev;        // index of the reverse arc in adj[to]
  };
  std::vector<std::vector<Arc>> adj;
  int source = 0;
  int sink = 0;
  std::size_t n_sites = 0;
  std::size_t n_stations = 0;

  int site_node(std::size_t i) const { return 1 + static_cast<int>(i); }
  int station_node(std::size_t j) const { return 1 + static_cast<int>(n_sites + j); }

  void add_arc(int from, int to, double cap, double cost) {
    adj[from].push_back({to, cap, cost, static_cast<int>(adj[to].size())});
    adj[to].push_back({from, 0.0, -cost, static_cast<int>(adj[from].size() - 1)});
  }
};

inline FlowNetwork build_flow_network(const ProblemInstance& inst) {
  if (inst.elastic())
    throw std::invalid_argument("social optimum: requires inelastic demand");
  const std::size_t m = inst.n_sites, n = inst.n_stations;
  const double inf = std::numeric_limits<double>::infinity();
  FlowNetwork net;
  net.n_sites = m;
  net.n_stations = n;
  net.source = 0;
  net.sink = static_cast<int>(m + n + 1);
  net.adj.resize(m + n + 2);
  const Vec& r = inst.inelastic_rates();
  for (std::size_t i = 0; i < m; ++i) net.add_arc(net.source, net.site_node(i), r[i], 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      net.add_arc(net.site_node(i), net.station_node(j), inf, inst.travel_min(i, j));
  for (std::size_t j = 0; j < n; ++j) {
    net.add_arc(net.station_node(j), net.sink, inst.capacities[j] / inst.sojourn_min, 0.0);
    net.add_arc(net.station_node(j), net.sink, inf, inst.sojourn_min);
  }
  return net;
}

struct SocialSolution {
  Matrix x;               // site-to-station rates
  Vec q;                  // q_j = T * sum_i x_ij
  double cost = 0.0;      // social cost C_s at the optimum
  double min_reduced_cost = 0.0;  // optimality certificate, >= -1e-9 at the optimum
  std::size_t augmentations = 0;
};

/// Min-cost flow by successive shortest augmenting paths with node
/// potentials. All original costs are nonnegative, so Dijkstra applies from
/// the start and reduced costs stay nonnegative throughout. Flows are
/// continuous: each augmentation pushes the full bottleneck, so every round
/// saturates a source or cheap station arc and at most m + n rounds occur.
inline SocialSolution solve_social_optimum(const ProblemInstance& inst) {
  constexpr double kSupplyEps = 1e-12;
  // Strict-improvement margin for label relaxation. Reduced costs of a
  // residual arc pair cancel exactly only in real arithmetic; the margin
  // absorbs the rounding dust that would otherwise form tiny negative
  // cycles and stall Dijkstra. Well below the 1e-9 optimality budget.
  constexpr double kRelaxEps = 1e-12;
  FlowNetwork net = build_flow_network(inst);
  const int n_nodes = static_cast<int>(net.adj.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> potential(n_nodes, 0.0), dist(n_nodes);
  std::vector<std::pair<int, int>> parent(n_nodes);  // (node, arc index into adj[node])

  std::size_t rounds = 0;
  const std::size_t max_rounds = 10 * (inst.n_sites + inst.n_stations) + 100;
  while (true) {
    double remaining = 0.0;
    for (const auto& a : net.adj[net.source]) remaining += std::max(a.cap, 0.0);
    if (remaining < kSupplyEps) break;
    if (rounds >= max_rounds)
      throw std::runtime_error("social optimum: augmentation budget exceeded");

    // Dijkstra on reduced costs; pq tie-break on node id for determinism.
    std::fill(dist.begin(), dist.end(), inf);
    dist[net.source] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, net.source});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (std::size_t k = 0; k < net.adj[u].size(); ++k) {
        const auto& a = net.adj[u][k];
        if (!(a.cap > 0.0)) continue;
        const double nd = d + a.cost + potential[u] - potential[a.to];
        if (nd < dist[a.to] - kRelaxEps) {
          dist[a.to] = nd;
          parent[a.to] = {u, static_cast<int>(k)};
          pq.push({nd, a.to});
        }
      }
    }
    if (dist[net.sink] >= inf) break;  // unreachable; cannot occur with the T-arcs

    for (int v = 0; v < n_nodes; ++v)
      potential[v] += std::min(dist[v], dist[net.sink]);

    double bottleneck = inf;
    for (int v = net.sink; v != net.source;) {
      auto [u, k] = parent[v];
      bottleneck = std::min(bottleneck, net.adj[u][k].cap);
      v = u;
    }
    for (int v = net.sink; v != net.source;) {
      auto [u, k] = parent[v];
      auto& a = net.adj[u][k];
      // the bottleneck arc zeroes out exactly; others keep a real residual
      a.cap = (a.cap == bottleneck) ? 0.0 : a.cap - bottleneck;
      net.adj[a.to][a.rev].cap += bottleneck;
      v = u;
    }
    ++rounds;
  }

  SocialSolution sol;
  sol.augmentations = rounds;
  sol.x = Matrix(inst.n_sites, inst.n_stations);
  for (std::size_t i = 0; i < inst.n_sites; ++i) {
    const int u = net.site_node(i);
    for (const auto& a : net.adj[u]) {
      // forward site->station arcs carry flow on their reverse residual
      const int j = a.to - net.station_node(0);
      if (j >= 0 && j < static_cast<int>(inst.n_stations) && a.cost >= 0.0) {
        const double flow = net.adj[a.to][a.rev].cap;
        sol.x(i, static_cast<std::size_t>(j)) = flow;
      }
    }
  }
  sol.q.resize(inst.n_stations);
  const Vec inflow = sol.x.col_sums();
  for (std::size_t j = 0; j < inst.n_stations; ++j)
    sol.q[j] = inst.sojourn_min * inflow[j];
  sol.cost = cost_Cs(sol.x, sol.q, inst);

  double min_rc = 0.0;
  for (int u = 0; u < n_nodes; ++u)
    for (const auto& a : net.adj[u])
      if (a.cap > 1e-9)
        min_rc = std::min(min_rc, a.cost + potential[u] - potential[a.to]);
  sol.min_reduced_cost = min_rc;
  return sol;
}

struct PoaRow {
  double r = 0.0;           // total demand rate swept
  double c0_selfish = 0.0;  // equilibrium objective without entropy
  double cs_selfish = 0.0;  // social cost of the selfish equilibrium
  double cs_opt = 0.0;      // planner's optimal social cost
  double gap = 0.0;         // cs_selfish - cs_opt
};

/// Sweeps total demand over r_values: for each r the template's site rates
/// are rescaled proportionally, the selfish equilibrium is solved with
/// eps = 1e-3 (hard-min surrogate; the softmin bias is below eps*log n),
/// and the planner's optimum is solved on the same instance.
inline std::vector<PoaRow> poa_sweep(const ProblemInstance& inst_template,
                                     const std::vector<double>& r_values,
                                     double sweep_epsilon = 1e-3) {
  if (inst_template.elastic())
    throw std::invalid_argument("poa_sweep: requires inelastic demand");
  for (std::size_t k = 0; k < r_values.size(); ++k) {
    if (!(r_values[k] > 0.0)) throw std::invalid_argument("poa_sweep: rates must be positive");
    if (k > 0 && !(r_values[k] > r_values[k - 1]))
      throw std::invalid_argument("poa_sweep: rates must be increasing");
  }
  const Vec& w = inst_template.inelastic_rates();
  double w_total = 0.0;
  for (double v : w) w_total += v;

  std::vector<PoaRow> rows;
  rows.reserve(r_values.size());
  for (double r : r_values) {
    ProblemInstance inst = inst_template;
    inst.epsilon_min = sweep_epsilon;
    Vec scaled(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) scaled[i] = r * w[i] / w_total;
    inst.demand = InelasticDemand{std::move(scaled)};

    PoaRow row;
    row.r = r;
    try {
      const EquilibriumSolution eq = solve_equilibrium(inst);
      row.c0_selfish = cost_C0(eq.x, eq.q, inst);
      row.cs_selfish = cost_Cs(eq.x, eq.q, inst);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("poa_sweep: solver failed at r=" + std::to_string(r) +
                                 ": " + e.what(),
                             e.last_mu, e.residual);
    }
    const SocialSolution opt = solve_social_optimum(inst);
    row.cs_opt = opt.cost;
    row.gap = row.cs_selfish - row.cs_opt;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace evload
