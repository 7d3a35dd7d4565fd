#pragma once

// Fixtures, random instance generators and brute-force oracles shared by
// the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "conres/conres.hpp"

namespace conres::testing {

inline NodeRecord sat(std::string id) { return {std::move(id), NodeKind::satellite, std::nullopt, std::nullopt}; }
inline NodeRecord cell(std::string id) { return {std::move(id), NodeKind::cell, std::nullopt, std::nullopt}; }

/// Builds a canonical plan from node records and undirected timed links.
struct PlanBuilder {
  ContactPlan plan;

  PlanBuilder(std::vector<NodeRecord> nodes, double t0, double t1) {
    plan.epoch = "2024-10-09T04:00:00Z";
    plan.t0 = t0;
    plan.t1 = t1;
    plan.nodes = std::move(nodes);
    std::sort(plan.nodes.begin(), plan.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  }

  PlanBuilder& link(const std::string& a, const std::string& b, double ts, double te, double delay_ms) {
    const NodeIndex ia = plan.index_of(a), ib = plan.index_of(b);
    const Delay d = Delay::from_ms(delay_ms);
    plan.contacts.push_back({ts, te, ia, ib, d});
    plan.contacts.push_back({ts, te, ib, ia, d});
    return *this;
  }

  ContactPlan build() const {
    ContactPlan p = plan;
    canonicalize(p);
    return p;
  }
};

/// The four-satellite, four-cell, three-window scenario with service pairs
/// (C1,C3), (C1,C4), (C2,C4). Every link has a 5 ms delay. Window 3 routes
/// C1 -> C4 over S4 -> S2.
inline ContactPlan worked_example_plan() {
  PlanBuilder b({cell("C1"), cell("C2"), cell("C3"), cell("C4"), sat("S1"), sat("S2"), sat("S3"), sat("S4")}, 0, 300);
  // tau1 = [0,100]
  b.link("C1", "S1", 0, 100, 5).link("S1", "C3", 0, 100, 5).link("S1", "S2", 0, 100, 5);
  // tau2 = [100,200]
  b.link("C1", "S3", 100, 200, 5).link("S3", "C3", 100, 200, 5).link("S3", "S4", 100, 200, 5);
  b.link("S4", "C4", 100, 200, 5);
  // tau3 = [200,300]
  b.link("C1", "S4", 200, 300, 5).link("S4", "C3", 200, 300, 5).link("S4", "S2", 200, 300, 5);
  // all windows
  b.link("C2", "S2", 0, 300, 5).link("S2", "C4", 0, 300, 5);
  return b.build();
}

inline ServiceDemand worked_example_demand(const ContactPlan& p) {
  std::vector<NodeIndex> active{p.index_of("C1"), p.index_of("C2"), p.index_of("C3"), p.index_of("C4")};
  std::vector<ServicePair> pairs{{p.index_of("C1"), p.index_of("C3")},
                                 {p.index_of("C1"), p.index_of("C4")},
                                 {p.index_of("C2"), p.index_of("C4")}};
  return ServiceDemand::from_pairs(active, pairs);
}

// ---------------------------------------------------------------------------
// Random small instances

struct RandomInstance {
  ContactPlan plan;
  std::vector<SnapshotGraph> graphs;
  ServiceDemand demand;
};

struct RandomParams {
  std::size_t max_sats = 15;
  std::size_t max_cells = 6;
  std::size_t max_windows = 5;
  double link_prob = 0.3;
  int max_delay_ms = 3;  // small integer delays force many exact ties
};

inline std::string padded(char prefix, std::size_t i) {
  std::string d = std::to_string(i);
  return std::string(1, prefix) + std::string(d.size() < 2 ? 2 - d.size() : 0, '0') + d;
}

inline RandomInstance random_instance(std::mt19937_64& rng, const RandomParams& rp = {}) {
  std::uniform_int_distribution<std::size_t> ns(1, rp.max_sats), nc(2, rp.max_cells), nw(1, rp.max_windows);
  const std::size_t S = ns(rng), C = nc(rng), W = nw(rng);
  std::vector<NodeRecord> nodes;
  for (std::size_t i = 0; i < C; ++i) nodes.push_back(cell(padded('C', i)));
  for (std::size_t i = 0; i < S; ++i) nodes.push_back(sat(padded('S', i)));
  PlanBuilder b(nodes, 0, 100.0 * static_cast<double>(W));
  std::bernoulli_distribution on(rp.link_prob), cell_on(std::min(1.0, rp.link_prob * 1.5)), extend(0.3);
  std::uniform_int_distribution<int> delay(1, rp.max_delay_ms);
  auto add = [&](const std::string& a, const std::string& c, bool is_sgl) {
    std::size_t w = 0;
    while (w < W) {
      if (is_sgl ? cell_on(rng) : on(rng)) {
        std::size_t end = w + 1;
        while (end < W && extend(rng)) ++end;
        b.link(a, c, 100.0 * w, 100.0 * end, delay(rng));
        w = end;
      } else {
        ++w;
      }
    }
  };
  for (std::size_t i = 0; i < S; ++i) {
    for (std::size_t j = i + 1; j < S; ++j) add(padded('S', i), padded('S', j), false);
    for (std::size_t j = 0; j < C; ++j) add(padded('S', i), padded('C', j), true);
  }
  RandomInstance r;
  r.plan = b.build();
  r.graphs = build_temporal_graphs(r.plan, 60.0);
  auto cells = r.plan.cells();
  if (std::bernoulli_distribution(0.5)(rng)) {
    r.demand = ServiceDemand::full_mesh(cells);
  } else {
    std::vector<ServicePair> pairs;
    std::bernoulli_distribution keep(0.5);
    for (std::size_t i = 0; i < cells.size(); ++i)
      for (std::size_t j = i + 1; j < cells.size(); ++j)
        if (keep(rng)) pairs.push_back({cells[i], cells[j]});
    r.demand = ServiceDemand::from_pairs(cells, pairs);
  }
  return r;
}

/// Random subset of satellites of size in [1, max_k].
inline std::vector<NodeIndex> random_failure_set(std::mt19937_64& rng, const ContactPlan& plan, std::size_t max_k) {
  auto sats = plan.satellites();
  std::shuffle(sats.begin(), sats.end(), rng);
  const std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min(max_k, sats.size()))(rng);
  sats.resize(k);
  std::sort(sats.begin(), sats.end());
  return sats;
}

// ---------------------------------------------------------------------------
// Brute-force routing oracle

struct EnumeratedPath {
  Delay delay;
  std::vector<NodeIndex> hops;
};

/// Every simple src -> dst path whose interior nodes are available
/// satellites, over available edges.
inline std::vector<EnumeratedPath> enumerate_paths(const SnapshotGraph& g, NodeIndex src, NodeIndex dst) {
  std::vector<EnumeratedPath> out;
  std::vector<NodeIndex> stack{src};
  std::vector<char> on(g.node_count(), 0);
  on[src] = 1;
  std::function<void(NodeIndex, Delay)> dfs = [&](NodeIndex u, Delay d) {
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
      auto w = g.edge_delay(u, v);
      if (!w || on[v] || !g.available(v)) continue;
      if (v == dst) {
        auto hops = stack;
        hops.push_back(v);
        out.push_back({d + *w, std::move(hops)});
        continue;
      }
      if (g.is_cell(v)) continue;
      on[v] = 1;
      stack.push_back(v);
      dfs(v, d + *w);
      stack.pop_back();
      on[v] = 0;
    }
  };
  if (g.available(src)) dfs(src, Delay::from_us(0));
  return out;
}

inline std::optional<EnumeratedPath> brute_force_shortest(const SnapshotGraph& g, NodeIndex src, NodeIndex dst) {
  auto all = enumerate_paths(g, src, dst);
  if (all.empty()) return std::nullopt;
  auto best = all.front();
  for (const auto& p : all) {
    const bool better = p.delay != best.delay ? p.delay < best.delay
                        : p.hops.size() != best.hops.size()
                            ? p.hops.size() < best.hops.size()
                            : std::lexicographical_compare(p.hops.begin(), p.hops.end(), best.hops.begin(), best.hops.end());
    if (better) best = p;
  }
  return best;
}

/// SATB by brute-force routing, pair by pair.
inline std::vector<std::vector<SatbValue>> brute_force_satb(std::span<const SnapshotGraph> graphs,
                                                             const ServiceDemand& demand) {
  std::vector<std::vector<SatbValue>> m;
  for (const auto& g : graphs) {
    std::vector<SatbValue> row(g.node_count(), 0);
    for (const auto& pr : demand.pairs())
      if (auto p = brute_force_shortest(g, pr.src, pr.dst))
        for (std::size_t k = 1; k + 1 < p->hops.size(); ++k) ++row[p->hops[k]];
    m.push_back(std::move(row));
  }
  return m;
}

// ---------------------------------------------------------------------------
// From-scratch failure evaluation

struct ScratchResult {
  std::vector<std::optional<double>> eta_with;
  std::vector<std::optional<double>> eta_without;
  RoutingTable paths;
  SatbMatrix matrix;
};

inline ScratchResult scratch_failure(std::span<const SnapshotGraph> graphs, const ServiceDemand& demand,
                                     const std::vector<NodeIndex>& failed, double t_f) {
  const std::size_t tau = failure_window(graphs, t_f);
  std::vector<SnapshotGraph> residual;
  for (const auto& g : graphs) residual.push_back(g.window().index >= tau ? remove_nodes(g, failed) : g);
  auto base = route_all_windows(graphs, demand);
  auto sr = satb_from_routing(route_all_windows(residual, demand), satellites_of(graphs.front()));
  ScratchResult r{{}, {}, sr.paths, sr.matrix};
  for (std::size_t x = 0; x < graphs.size(); ++x) {
    r.eta_with.push_back(eta_of(routed_count(sr.paths[x]), demand.size()));
    std::size_t survive = 0;
    for (const auto& p : base[x]) {
      if (!p) continue;
      bool hit = false;
      if (x >= tau)
        for (NodeIndex f : failed) hit = hit || p->traverses(f);
      survive += hit ? 0 : 1;
    }
    r.eta_without.push_back(eta_of(survive, demand.size()));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Independent geometry for the geo-cluster oracle: rotation matrices
// applied explicitly, rather than the closed-form product.

struct Mat3 {
  double m[3][3];
  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
};

inline Mat3 rot_z(double a) { return {{{std::cos(a), -std::sin(a), 0}, {std::sin(a), std::cos(a), 0}, {0, 0, 1}}}; }
inline Mat3 rot_x(double a) { return {{{1, 0, 0}, {0, std::cos(a), -std::sin(a)}, {0, std::sin(a), std::cos(a)}}}; }

inline Vec3 oracle_satellite_position(const OrbitalElements& e, double t) {
  const double a = 6371.0 + e.altitude_km;
  const double period = 2.0 * std::numbers::pi * std::sqrt(a * a * a / 398600.4418);
  const double u = (e.phase_deg / 180.0) * std::numbers::pi + 2.0 * std::numbers::pi * (t - e.epoch_s) / period;
  const Vec3 in_plane{a * std::cos(u), a * std::sin(u), 0.0};
  return rot_z(e.raan_deg * std::numbers::pi / 180.0) * (rot_x(e.inclination_deg * std::numbers::pi / 180.0) * in_plane);
}

inline Vec3 oracle_cell_position(double lat_deg, double lon_deg, double t, double radius) {
  const double lat = lat_deg * std::numbers::pi / 180.0;
  const Vec3 at_epoch{radius * std::cos(lat) * std::cos(lon_deg * std::numbers::pi / 180.0),
                      radius * std::cos(lat) * std::sin(lon_deg * std::numbers::pi / 180.0), radius * std::sin(lat)};
  return rot_z(2.0 * std::numbers::pi * t / 86164.0905) * at_epoch;
}

// ---------------------------------------------------------------------------
// Desk-scale Walker scenario

inline std::vector<GroundCell> desk_cells(std::size_t n) {
  // Spread over the inhabited latitude band; deterministic.
  static const GroundCell base[] = {
      {"C00", 40.7, -74.0},  {"C01", 51.5, -0.1},  {"C02", 35.7, 139.7}, {"C03", -33.9, 151.2}, {"C04", -23.5, -46.6},
      {"C05", 19.4, -99.1},  {"C06", 28.6, 77.2},  {"C07", 30.0, 31.2},  {"C08", -1.3, 36.8},   {"C09", 1.35, 103.8},
      {"C10", 55.8, 37.6},   {"C11", 34.0, -118.2}, {"C12", -34.6, -58.4}, {"C13", 6.5, 3.4},   {"C14", 39.9, 116.4},
      {"C15", 25.2, 55.3},   {"C16", 47.6, -122.3}, {"C17", -26.2, 28.0}, {"C18", 13.8, 100.5}, {"C19", 41.0, 29.0},
      {"C20", 45.5, -73.6},  {"C21", -12.0, -77.0}, {"C22", 37.6, 127.0}, {"C23", 52.5, 13.4},  {"C24", -37.8, 145.0},
      {"C25", 33.7, -84.4},  {"C26", 14.6, 121.0}, {"C27", 24.9, 67.0},  {"C28", 4.7, -74.1},   {"C29", 59.3, 18.1},
  };
  if (n > std::size(base)) throw ArgumentError("desk_cells: at most 30 cells");
  return {base, base + n};
}

inline ConstellationConfig desk_config(std::size_t cells = 10, double horizon_s = 7200.0, std::uint64_t seed = 7) {
  ConstellationConfig cfg;
  cfg.layers = {ShellConfig{20, 20, 1150.0, 53.0, 9.0}};
  cfg.horizon_s = horizon_s;
  cfg.cells = desk_cells(cells);
  cfg.delay_mode = DelayMode::uniform;
  cfg.seed = seed;
  return cfg;
}

}  // namespace conres::testing
