#pragma once

// Service-aware temporal betweenness: per-window counts of designated
// service paths traversing each satellite, the window x satellite matrix,
// its ranking permutation, and the per-(satellite, window) path index.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "conres/parallel.hpp"
#include "conres/routing.hpp"
#include "conres/temporal_graph.hpp"
#include "conres/types.hpp"

namespace conres {

using SatbValue = std::uint32_t;

/// Per-window routed paths for every service pair.
using RoutingTable = std::vector<WindowPaths>;

inline RoutingTable route_all_windows(std::span<const SnapshotGraph> graphs, const ServiceDemand& demand,
                                      unsigned jobs = 1) {
  RoutingTable table(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t x) { table[x] = all_service_paths(graphs[x], demand); });
  return table;
}

/// Rows are windows, columns are satellites in ascending node-index order.
class SatbMatrix {
 public:
  SatbMatrix() = default;
  SatbMatrix(std::size_t windows, std::vector<NodeIndex> satellites)
      : windows_(windows), sats_(std::move(satellites)), values_(windows_ * sats_.size(), 0) {
    for (std::size_t c = 0; c < sats_.size(); ++c) col_.emplace(sats_[c], c);
  }

  std::size_t windows() const { return windows_; }
  std::size_t satellite_count() const { return sats_.size(); }
  const std::vector<NodeIndex>& satellites() const { return sats_; }

  std::optional<std::size_t> column(NodeIndex sat) const {
    auto it = col_.find(sat);
    if (it == col_.end()) return std::nullopt;
    return it->second;
  }

  SatbValue at(std::size_t window, std::size_t col) const { return values_.at(window * sats_.size() + col); }
  SatbValue& at(std::size_t window, std::size_t col) { return values_.at(window * sats_.size() + col); }

  SatbValue value(std::size_t window, NodeIndex sat) const {
    auto c = column(sat);
    if (!c) throw ArgumentError("not a satellite column: " + std::to_string(sat));
    return at(window, *c);
  }
  SatbValue& value(std::size_t window, NodeIndex sat) {
    auto c = column(sat);
    if (!c) throw ArgumentError("not a satellite column: " + std::to_string(sat));
    return at(window, *c);
  }

  std::span<const SatbValue> row(std::size_t window) const {
    if (window >= windows_) throw ArgumentError("window " + std::to_string(window) + " out of range");
    return std::span<const SatbValue>(values_).subspan(window * sats_.size(), sats_.size());
  }

  /// The SATB vector of one satellite across all windows.
  std::vector<SatbValue> column_values(NodeIndex sat) const {
    auto c = column(sat);
    if (!c) throw ArgumentError("not a satellite column: " + std::to_string(sat));
    std::vector<SatbValue> v(windows_);
    for (std::size_t x = 0; x < windows_; ++x) v[x] = at(x, *c);
    return v;
  }

  friend bool operator==(const SatbMatrix& a, const SatbMatrix& b) {
    return a.windows_ == b.windows_ && a.sats_ == b.sats_ && a.values_ == b.values_;
  }

 private:
  std::size_t windows_ = 0;
  std::vector<NodeIndex> sats_;
  std::map<NodeIndex, std::size_t> col_;
  std::vector<SatbValue> values_;
};

/// Each row lists satellites by descending SATB, ties by ascending id.
using RankingMatrix = std::vector<std::vector<NodeIndex>>;

/// (satellite, window) -> indices of service pairs whose path traverses the
/// satellite in that window. Paths themselves live in the RoutingTable.
class PathIndex {
 public:
  PathIndex() = default;
  explicit PathIndex(std::size_t windows) : by_window_(windows) {}

  std::size_t windows() const { return by_window_.size(); }

  std::span<const std::size_t> pairs(std::size_t window, NodeIndex sat) const {
    const auto& m = by_window_.at(window);
    auto it = m.find(sat);
    if (it == m.end()) return {};
    return it->second;
  }

  void add(std::size_t window, NodeIndex sat, std::size_t pair) {
    auto& v = by_window_.at(window)[sat];
    v.insert(std::lower_bound(v.begin(), v.end(), pair), pair);
  }

  void remove(std::size_t window, NodeIndex sat, std::size_t pair) {
    auto& m = by_window_.at(window);
    auto it = m.find(sat);
    if (it == m.end()) return;
    auto& v = it->second;
    auto pos = std::lower_bound(v.begin(), v.end(), pair);
    if (pos != v.end() && *pos == pair) v.erase(pos);
    if (v.empty()) m.erase(it);
  }

  const std::map<NodeIndex, std::vector<std::size_t>>& window_entries(std::size_t window) const {
    return by_window_.at(window);
  }

  friend bool operator==(const PathIndex&, const PathIndex&) = default;

 private:
  std::vector<std::map<NodeIndex, std::vector<std::size_t>>> by_window_;
};

inline std::vector<NodeIndex> satellites_of(const SnapshotGraph& g) {
  std::vector<NodeIndex> s;
  for (NodeIndex v = 0; v < g.node_count(); ++v)
    if (g.is_satellite(v)) s.push_back(v);
  return s;
}

/// Counts, per window, how many service paths contain `sat` as an interior hop.
inline std::vector<SatbValue> satb_single(std::span<const SnapshotGraph> graphs, const ServiceDemand& demand,
                                          NodeIndex sat) {
  if (graphs.empty()) return {};
  if (sat >= graphs.front().node_count() || !graphs.front().is_satellite(sat))
    throw ArgumentError("satb_single: " + std::to_string(sat) + " is not a satellite");
  std::vector<SatbValue> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) {
    SatbValue beta = 0;
    for (const auto& p : demand.pairs()) {
      auto path = shortest_path(g, p.src, p.dst);
      if (path && path->traverses(sat)) ++beta;
    }
    out.push_back(beta);
  }
  return out;
}

struct SatbResult {
  RoutingTable paths;
  SatbMatrix matrix;
  PathIndex index;
};

/// Builds M and X from an existing routing table (frequency count of
/// interior hops, one all-pairs pass per window).
inline SatbResult satb_from_routing(RoutingTable paths, std::vector<NodeIndex> satellites) {
  SatbResult r{std::move(paths), SatbMatrix(0, {}), PathIndex(0)};
  r.matrix = SatbMatrix(r.paths.size(), std::move(satellites));
  r.index = PathIndex(r.paths.size());
  for (std::size_t x = 0; x < r.paths.size(); ++x) {
    for (std::size_t k = 0; k < r.paths[x].size(); ++k) {
      const auto& p = r.paths[x][k];
      if (!p) continue;
      for (NodeIndex v : p->interior()) {
        ++r.matrix.value(x, v);
        r.index.add(x, v, k);
      }
    }
  }
  return r;
}

inline SatbResult satb_all(std::span<const SnapshotGraph> graphs, const ServiceDemand& demand, unsigned jobs = 1) {
  std::vector<NodeIndex> sats = graphs.empty() ? std::vector<NodeIndex>{} : satellites_of(graphs.front());
  return satb_from_routing(route_all_windows(graphs, demand, jobs), std::move(sats));
}

inline std::vector<NodeIndex> rank_row(const SatbMatrix& m, std::size_t window) {
  const auto row = m.row(window);
  std::vector<std::size_t> cols(row.size());
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  std::vector<NodeIndex> out;
  out.reserve(cols.size());
  for (auto c : cols) out.push_back(m.satellites()[c]);
  return out;
}

inline RankingMatrix rank(const SatbMatrix& m) {
  RankingMatrix p;
  p.reserve(m.windows());
  for (std::size_t x = 0; x < m.windows(); ++x) p.push_back(rank_row(m, x));
  return p;
}

/// 1-based rank of `sat` in `window` (its position in the ranking row).
inline std::size_t rank_of(const RankingMatrix& p, std::size_t window, NodeIndex sat) {
  const auto& row = p.at(window);
  auto it = std::find(row.begin(), row.end(), sat);
  if (it == row.end()) throw ArgumentError("rank_of: satellite not ranked");
  return static_cast<std::size_t>(it - row.begin()) + 1;
}

struct CriticalAnalysis {
  RoutingTable paths;
  SatbMatrix matrix;
  RankingMatrix ranking;
  PathIndex index;
};

inline CriticalAnalysis rank_critical(std::span<const SnapshotGraph> graphs, const ServiceDemand& demand,
                                      unsigned jobs = 1) {
  auto r = satb_all(graphs, demand, jobs);
  auto p = rank(r.matrix);
  return {std::move(r.paths), std::move(r.matrix), std::move(p), std::move(r.index)};
}

/// Satellites with SATB > 0 in `window`, ascending id.
inline std::vector<NodeIndex> critical_set(const SatbMatrix& m, std::size_t window) {
  const auto row = m.row(window);
  std::vector<NodeIndex> out;
  for (std::size_t c = 0; c < row.size(); ++c)
    if (row[c] > 0) out.push_back(m.satellites()[c]);
  return out;
}

/// First k entries of the ranking row (the k most critical satellites).
inline std::vector<NodeIndex> top_k(const RankingMatrix& p, std::size_t window, std::size_t k) {
  const auto& row = p.at(window);
  if (k > row.size()) throw ArgumentError("top_k: k exceeds satellite count");
  return {row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k)};
}

// ---------------------------------------------------------------------------
// Export

/// Header `window_index,<sat ids...>`, one row per window.
inline std::string satb_matrix_csv(const SatbMatrix& m, const std::vector<NodeRecord>& nodes) {
  std::string out = "window_index";
  for (NodeIndex s : m.satellites()) out += "," + nodes[s].id;
  out += '\n';
  for (std::size_t x = 0; x < m.windows(); ++x) {
    out += std::to_string(x);
    for (auto v : m.row(x)) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

/// Header `window_index,rank_1..rank_n`, cells are satellite ids.
inline std::string ranking_csv(const RankingMatrix& p, const std::vector<NodeRecord>& nodes) {
  std::string out = "window_index";
  const std::size_t n = p.empty() ? 0 : p.front().size();
  for (std::size_t r = 1; r <= n; ++r) out += ",rank_" + std::to_string(r);
  out += '\n';
  for (std::size_t x = 0; x < p.size(); ++x) {
    out += std::to_string(x);
    for (NodeIndex s : p[x]) out += "," + nodes[s].id;
    out += '\n';
  }
  return out;
}

/// Parses the matrix CSV back into values against a node table.
inline SatbMatrix parse_satb_matrix_csv(std::string_view text, const ContactPlan& plan) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    if (nl > start) lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty()) throw ParseError(1, "empty matrix file");
  auto header = detail::split_csv(lines[0]);
  if (header.empty() || header[0] != "window_index") throw ParseError(1, "expected window_index header");
  std::vector<NodeIndex> sats;
  for (std::size_t c = 1; c < header.size(); ++c) sats.push_back(plan.index_of(header[c]));
  SatbMatrix m(lines.size() - 1, sats);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto f = detail::split_csv(lines[r]);
    if (f.size() != header.size()) throw ParseError(r + 1, "column count mismatch");
    for (std::size_t c = 1; c < f.size(); ++c) {
      double v = 0;
      if (!parse_double(f[c], v) || v < 0 || v != static_cast<SatbValue>(v))
        throw ParseError(r + 1, "SATB entries must be non-negative integers");
      m.at(r - 1, c - 1) = static_cast<SatbValue>(v);
    }
  }
  return m;
}

}  // namespace conres
