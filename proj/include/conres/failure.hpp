#pragma once

// Node-failure events and their per-window impact on connectivity, path
// delay, and the importance of the remaining satellites.
//
// Evaluation is incremental: for every window from the failure window on,
// only the baseline paths that traverse a failed satellite are withdrawn
// and recomputed in the residual graph. Since the residual graph is a
// subgraph and the routing order is total, every untouched baseline path
// is still the minimum in the residual graph, so the result equals a full
// recomputation.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "conres/orbital.hpp"
#include "conres/parallel.hpp"
#include "conres/routing.hpp"
#include "conres/satb.hpp"
#include "conres/temporal_graph.hpp"
#include "conres/types.hpp"

namespace conres {

enum class FailureKind { explicit_set, top_k, geo_cluster };

inline std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::explicit_set: return "ids";
    case FailureKind::top_k: return "top_k";
    case FailureKind::geo_cluster: return "geo";
  }
  return "?";
}

struct GeoClusterSpec {
  std::vector<std::string> cells;  // candidate centers; empty means every cell
  std::size_t count = 1;
  double radius_km = 2000.0;
  double altitude_km = 1100.0;
  std::uint64_t seed = 1;
};

struct GeoRegion {
  std::string center_cell;
  Vec3 center;
};

struct FailureEvent {
  double t_f = 0.0;
  std::vector<NodeIndex> failed;  // sorted, unique
  FailureKind kind = FailureKind::explicit_set;
  std::size_t top_k = 0;
  std::optional<GeoClusterSpec> geo;
  std::vector<GeoRegion> regions;

  bool is_noop() const { return failed.empty(); }
};

inline FailureEvent explicit_failure(double t_f, std::vector<NodeIndex> failed) {
  std::sort(failed.begin(), failed.end());
  failed.erase(std::unique(failed.begin(), failed.end()), failed.end());
  return {t_f, std::move(failed), FailureKind::explicit_set, 0, std::nullopt, {}};
}

/// Index of the window a failure at t_f takes effect in: the first window
/// whose end is >= t_f.
inline std::size_t failure_window(std::span<const SnapshotGraph> graphs, double t_f) {
  if (graphs.empty()) throw ArgumentError("failure_window: no windows");
  if (t_f < graphs.front().window().t_start || t_f > graphs.back().window().t_end)
    throw ArgumentError("failure time " + format_double(t_f) + " lies outside the horizon");
  auto it = std::lower_bound(graphs.begin(), graphs.end(), t_f,
                             [](const SnapshotGraph& g, double t) { return g.window().t_end < t; });
  return static_cast<std::size_t>(it - graphs.begin());
}

/// The k highest-ranked satellites of the failure window.
inline FailureEvent top_k_failure(double t_f, std::size_t k, std::span<const SnapshotGraph> graphs,
                                  const RankingMatrix& ranking) {
  if (k == 0) throw ArgumentError("top_k must be >= 1");
  const std::size_t w = failure_window(graphs, t_f);
  FailureEvent e = explicit_failure(t_f, top_k(ranking, w, k));
  e.kind = FailureKind::top_k;
  e.top_k = k;
  return e;
}

/// Satellites inside spheres of `radius_km` centred `altitude_km` above
/// randomly chosen ground cells at t_f. An empty result is a valid no-op.
inline FailureEvent geo_cluster_failure(const ContactPlan& plan, std::span<const Satellite> sats,
                                        std::span<const GroundCell> cells, double t_f, const GeoClusterSpec& spec) {
  if (!(spec.radius_km > 0.0)) throw ArgumentError("geo cluster radius must be > 0");
  if (spec.count == 0) throw ArgumentError("geo cluster count must be >= 1");
  std::vector<const GroundCell*> candidates;
  if (spec.cells.empty()) {
    for (const auto& c : cells) candidates.push_back(&c);
  } else {
    for (const auto& id : spec.cells) {
      auto it = std::find_if(cells.begin(), cells.end(), [&](const GroundCell& c) { return c.id == id; });
      if (it == cells.end()) throw ArgumentError("geo cluster: unknown cell '" + id + "'");
      candidates.push_back(&*it);
    }
  }
  if (candidates.empty()) throw ArgumentError("geo cluster: no candidate cells");

  FailureEvent e;
  e.t_f = t_f;
  e.kind = FailureKind::geo_cluster;
  e.geo = spec;
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const double lift = (kEarthRadiusKm + spec.altitude_km) / kEarthRadiusKm;
  for (std::size_t r = 0; r < spec.count; ++r) {
    const GroundCell& c = *candidates[pick(rng)];
    e.regions.push_back({c.id, lift * ground_cell_position(c, t_f)});
  }
  std::vector<NodeIndex> failed;
  for (const auto& s : sats) {
    const Vec3 p = satellite_position(s.elements, t_f);
    for (const auto& reg : e.regions) {
      if (distance(p, reg.center) <= spec.radius_km) {
        failed.push_back(plan.index_of(s.id));
        break;
      }
    }
  }
  std::sort(failed.begin(), failed.end());
  e.failed = std::move(failed);
  return e;
}

// ---------------------------------------------------------------------------

struct PathKey {
  std::size_t window = 0;
  std::size_t pair = 0;  // index into ServiceDemand::pairs()

  friend auto operator<=>(const PathKey&, const PathKey&) = default;
};

struct DelayChange {
  Delay pre;
  Delay post;  // Delay::infinite() when the pair became unroutable

  friend bool operator==(const DelayChange&, const DelayChange&) = default;
};

struct ImpactReport {
  std::size_t failure_window = 0;
  std::vector<NodeIndex> failed;
  bool noop = false;
  /// Fraction (%) of pairs whose baseline path avoids every failed node.
  std::vector<std::optional<double>> eta_no_reroute;
  /// Fraction (%) of pairs reachable in the residual graphs.
  std::vector<std::optional<double>> eta_with_reroute;
  std::map<PathKey, DelayChange> affected_paths;
  std::vector<NodeIndex> affected_nodes;  // sorted; includes failed nodes on withdrawn paths
  RoutingTable paths;                     // post-failure (replacement) paths
  SatbMatrix matrix;
  PathIndex index;
  std::vector<std::size_t> recomputed_pairs;  // per window
};

inline std::optional<double> eta_of(std::size_t routed, std::size_t total) {
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(routed) / static_cast<double>(total);
}

inline void check_event(std::span<const SnapshotGraph> graphs, const FailureEvent& event) {
  if (event.failed.empty() && event.kind != FailureKind::geo_cluster)
    throw ArgumentError("failure event has an empty failed set");
  const std::size_t n = graphs.empty() ? 0 : graphs.front().node_count();
  for (NodeIndex v : event.failed) {
    if (v >= n) throw ArgumentError("failed node index " + std::to_string(v) + " is unknown");
    if (graphs.front().is_cell(v)) throw ArgumentError("ground cell '" + graphs.front().nodes()[v].id + "' cannot fail");
  }
}

/// Incremental impact of `event` given a baseline computed on the same
/// graphs and demand.
inline ImpactReport evaluate_failure(std::span<const SnapshotGraph> graphs, const ServiceDemand& demand,
                                     const CriticalAnalysis& baseline, const FailureEvent& event, unsigned jobs = 1) {
  check_event(graphs, event);
  if (baseline.paths.size() != graphs.size()) throw ArgumentError("baseline window count mismatch");
  const std::size_t n = graphs.size();
  const std::size_t total = demand.size();

  ImpactReport r;
  r.failure_window = failure_window(graphs, event.t_f);
  r.failed = event.failed;
  r.noop = event.failed.empty();
  r.paths = baseline.paths;
  r.matrix = baseline.matrix;
  r.index = baseline.index;
  r.eta_no_reroute.resize(n);
  r.eta_with_reroute.resize(n);
  r.recomputed_pairs.assign(n, 0);

  std::vector<std::map<PathKey, DelayChange>> changes(n);
  std::vector<std::set<NodeIndex>> touched(n);

  auto process = [&](std::size_t x) {
    const std::size_t base_routed = routed_count(baseline.paths[x]);
    if (x < r.failure_window || r.noop) {
      r.eta_no_reroute[x] = eta_of(base_routed, total);
      r.eta_with_reroute[x] = r.eta_no_reroute[x];
      return;
    }
    std::vector<std::size_t> affected;
    for (NodeIndex f : event.failed) {
      auto ps = baseline.index.pairs(x, f);
      affected.insert(affected.end(), ps.begin(), ps.end());
    }
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    r.eta_no_reroute[x] = eta_of(base_routed - affected.size(), total);
    if (affected.empty()) {
      r.eta_with_reroute[x] = eta_of(base_routed, total);
      return;
    }

    const SnapshotGraph residual = remove_nodes(graphs[x], event.failed);
    auto& window_paths = r.paths[x];
    for (std::size_t k : affected) {
      const ServicePath old = *window_paths[k];
      for (NodeIndex v : old.interior()) {
        --r.matrix.value(x, v);
        r.index.remove(x, v, k);
        touched[x].insert(v);
      }
      auto repl = shortest_path(residual, old.src, old.dst);
      ++r.recomputed_pairs[x];
      if (repl) {
        for (NodeIndex v : repl->interior()) {
          ++r.matrix.value(x, v);
          r.index.add(x, v, k);
          touched[x].insert(v);
        }
        changes[x][{x, k}] = {old.delay, repl->delay};
      } else {
        changes[x][{x, k}] = {old.delay, Delay::infinite()};
      }
      window_paths[k] = std::move(repl);
    }
    r.eta_with_reroute[x] = eta_of(routed_count(window_paths), total);
  };

  // Windows write disjoint rows of matrix/paths; PathIndex keeps one map
  // per window, so per-window mutation is race free.
  parallel_for(n, jobs, process);

  std::set<NodeIndex> w;
  for (std::size_t x = 0; x < n; ++x) {
    r.affected_paths.insert(changes[x].begin(), changes[x].end());
    w.insert(touched[x].begin(), touched[x].end());
  }
  r.affected_nodes.assign(w.begin(), w.end());
  return r;
}

/// Baseline + incremental evaluation; the headline series are the
/// post-reroute connectivity and delays.
inline ImpactReport evaluate_with_rerouting(std::span<const SnapshotGraph> graphs, const ServiceDemand& demand,
                                            const FailureEvent& event, unsigned jobs = 1) {
  const auto baseline = rank_critical(graphs, demand, jobs);
  return evaluate_failure(graphs, demand, baseline, event, jobs);
}

// ---------------------------------------------------------------------------
// Event descriptor files:
//   {"t_f": 0, "kind": "ids",   "ids": ["S0001", ...]}
//   {"t_f": 0, "kind": "top_k", "top_k": 3}
//   {"t_f": 0, "kind": "geo",   "geo": {"cells": [...], "count": 1,
//                                       "radius_km": 2000, "altitude_km": 1100, "seed": 7}}
// A document may be a single event object or {"events": [...]}.

struct EventDescriptor {
  std::string name;
  double t_f = 0.0;
  FailureKind kind = FailureKind::explicit_set;
  std::vector<std::string> ids;
  std::size_t top_k = 0;
  GeoClusterSpec geo;
  bool geo_seed_given = false;  // otherwise the scenario seed is used
};

inline EventDescriptor event_descriptor_from_json(const nlohmann::json& j, std::size_t position) {
  const std::string where = "events[" + std::to_string(position) + "]";
  if (!j.is_object()) throw ConfigError(where, "must be an object");
  EventDescriptor d;
  d.name = j.value("name", "event" + std::to_string(position));
  if (!j.contains("t_f") || !j.at("t_f").is_number()) throw ConfigError(where + ".t_f", "missing or not a number");
  d.t_f = j.at("t_f").get<double>();
  const std::string kind = j.value("kind", std::string{});
  if (kind == "ids") {
    d.kind = FailureKind::explicit_set;
    if (!j.contains("ids") || !j.at("ids").is_array()) throw ConfigError(where + ".ids", "missing or not a list");
    d.ids = j.at("ids").get<std::vector<std::string>>();
  } else if (kind == "top_k") {
    d.kind = FailureKind::top_k;
    if (!j.contains("top_k") || !j.at("top_k").is_number_integer() || j.at("top_k").get<std::int64_t>() <= 0)
      throw ConfigError(where + ".top_k", "missing or not a positive integer");
    d.top_k = j.at("top_k").get<std::size_t>();
  } else if (kind == "geo") {
    d.kind = FailureKind::geo_cluster;
    if (!j.contains("geo") || !j.at("geo").is_object()) throw ConfigError(where + ".geo", "missing or not an object");
    const auto& g = j.at("geo");
    d.geo.cells = g.value("cells", std::vector<std::string>{});
    d.geo.count = g.value("count", std::size_t{1});
    d.geo.radius_km = g.value("radius_km", 2000.0);
    d.geo.altitude_km = g.value("altitude_km", 1100.0);
    d.geo_seed_given = g.contains("seed");
    d.geo.seed = g.value("seed", std::uint64_t{1});
  } else {
    throw ConfigError(where + ".kind", "must be one of ids|top_k|geo");
  }
  return d;
}

inline std::vector<EventDescriptor> event_descriptors_from_json(const nlohmann::json& j) {
  std::vector<EventDescriptor> out;
  if (j.is_object() && j.contains("events")) {
    std::size_t i = 0;
    for (const auto& e : j.at("events")) out.push_back(event_descriptor_from_json(e, i++));
  } else if (j.is_array()) {
    std::size_t i = 0;
    for (const auto& e : j) out.push_back(event_descriptor_from_json(e, i++));
  } else {
    out.push_back(event_descriptor_from_json(j, 0));
  }
  return out;
}

}  // namespace conres
