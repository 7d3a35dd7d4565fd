#pragma once

// Discretization of a contact plan into per-window snapshot graphs, and
// node removal producing residual graphs.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "conres/contact_plan.hpp"
#include "conres/types.hpp"

namespace conres {

struct TimeWindow {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;

  double length() const { return t_end - t_start; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct Edge {
  NodeIndex to = kNoNode;
  Delay delay;
  bool available = true;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Static directed graph of one window. Adjacency is keyed by source node
/// and each list is sorted by target.
class SnapshotGraph {
 public:
  SnapshotGraph() = default;
  SnapshotGraph(TimeWindow window, std::shared_ptr<const std::vector<NodeRecord>> nodes)
      : window_(window),
        nodes_(std::move(nodes)),
        node_available_(nodes_->size(), 1),
        out_(nodes_->size()) {}

  const TimeWindow& window() const { return window_; }
  std::size_t node_count() const { return out_.size(); }
  const std::vector<NodeRecord>& nodes() const { return *nodes_; }
  const std::shared_ptr<const std::vector<NodeRecord>>& node_table() const { return nodes_; }

  bool is_cell(NodeIndex v) const { return (*nodes_)[v].kind == NodeKind::cell; }
  bool is_satellite(NodeIndex v) const { return (*nodes_)[v].kind == NodeKind::satellite; }
  bool available(NodeIndex v) const { return node_available_[v] != 0; }

  std::span<const Edge> edges(NodeIndex from) const { return out_[from]; }

  /// Delay of the available edge from -> to, if any.
  std::optional<Delay> edge_delay(NodeIndex from, NodeIndex to) const {
    const auto& adj = out_[from];
    auto it = std::lower_bound(adj.begin(), adj.end(), to, [](const Edge& e, NodeIndex v) { return e.to < v; });
    if (it == adj.end() || it->to != to || !it->available) return std::nullopt;
    return it->delay;
  }

  std::size_t edge_count(bool available_only = true) const {
    std::size_t n = 0;
    for (const auto& adj : out_)
      for (const auto& e : adj) n += (!available_only || e.available) ? 1 : 0;
    return n;
  }

  /// Inserts or lowers the delay of an edge (minimum wins).
  void add_edge(NodeIndex from, NodeIndex to, Delay d) {
    auto& adj = out_[from];
    auto it = std::lower_bound(adj.begin(), adj.end(), to, [](const Edge& e, NodeIndex v) { return e.to < v; });
    if (it != adj.end() && it->to == to) {
      it->delay = std::min(it->delay, d);
      return;
    }
    adj.insert(it, Edge{to, d, true});
  }

  /// Marks the nodes unavailable together with every incident edge.
  void disable_nodes(std::span<const NodeIndex> vs) {
    if (vs.empty()) return;
    for (NodeIndex v : vs) node_available_[v] = 0;
    for (NodeIndex u = 0; u < out_.size(); ++u)
      for (auto& e : out_[u])
        if (!node_available_[u] || !node_available_[e.to]) e.available = false;
  }

  friend bool operator==(const SnapshotGraph& a, const SnapshotGraph& b) {
    return a.window_ == b.window_ && *a.nodes_ == *b.nodes_ && a.node_available_ == b.node_available_ &&
           a.out_ == b.out_;
  }

 private:
  TimeWindow window_;
  std::shared_ptr<const std::vector<NodeRecord>> nodes_ = std::make_shared<const std::vector<NodeRecord>>();
  std::vector<std::uint8_t> node_available_;
  std::vector<std::vector<Edge>> out_;
};

/// Every distinct contact start/end plus the horizon endpoints, ascending.
inline std::vector<double> collect_boundaries(const ContactPlan& plan) {
  std::vector<double> b;
  b.reserve(2 * plan.contacts.size() + 2);
  b.push_back(plan.t0);
  b.push_back(plan.t1);
  for (const auto& c : plan.contacts) {
    b.push_back(c.t_start);
    b.push_back(c.t_end);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

/// Greedy left-to-right merge: a window is closed at the first boundary
/// where its span reaches `threshold_s`. A trailing remainder shorter than
/// the threshold becomes the final window.
inline std::vector<TimeWindow> merge_windows(std::span<const double> boundaries, double threshold_s) {
  if (boundaries.size() < 2) throw ArgumentError("merge_windows: need at least two boundaries");
  if (!(threshold_s > 0.0)) throw ArgumentError("merge_windows: threshold must be > 0");
  if (!std::is_sorted(boundaries.begin(), boundaries.end()))
    throw ArgumentError("merge_windows: boundaries must be sorted");
  std::vector<TimeWindow> out;
  double start = boundaries.front();
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (boundaries[i] - start >= threshold_s) {
      out.push_back({out.size(), start, boundaries[i]});
      start = boundaries[i];
    }
  }
  if (start < boundaries.back()) out.push_back({out.size(), start, boundaries.back()});
  return out;
}

/// Snapshot x holds edge (u, v) iff some contact u->v satisfies
/// t_start <= window start and t_end >= window end; the minimum delay
/// among covering contacts is kept. All nodes start available.
inline std::vector<SnapshotGraph> discretize(const ContactPlan& plan, std::span<const TimeWindow> windows) {
  if (windows.empty()) throw ArgumentError("discretize: no windows");
  if (windows.front().t_start != plan.t0 || windows.back().t_end != plan.t1)
    throw ArgumentError("discretize: windows must tile the plan horizon");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!(windows[i].t_start < windows[i].t_end)) throw ArgumentError("discretize: empty window");
    if (i > 0 && windows[i].t_start != windows[i - 1].t_end) throw ArgumentError("discretize: windows not contiguous");
  }
  auto table = std::make_shared<const std::vector<NodeRecord>>(plan.nodes);
  std::vector<SnapshotGraph> graphs;
  graphs.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    TimeWindow w = windows[i];
    w.index = i;
    graphs.emplace_back(w, table);
  }
  for (const auto& c : plan.contacts) {
    auto first = std::lower_bound(windows.begin(), windows.end(), c.t_start,
                                  [](const TimeWindow& w, double t) { return w.t_start < t; });
    for (auto it = first; it != windows.end() && it->t_end <= c.t_end; ++it)
      graphs[static_cast<std::size_t>(it - windows.begin())].add_edge(c.from, c.to, c.delay);
  }
  return graphs;
}

/// Convenience: boundaries -> merged windows -> snapshots.
inline std::vector<SnapshotGraph> build_temporal_graphs(const ContactPlan& plan, double threshold_s) {
  const auto b = collect_boundaries(plan);
  if (b.size() < 2) throw ArgumentError("plan horizon is empty");
  const auto w = merge_windows(b, threshold_s);
  return discretize(plan, w);
}

/// Residual graph with `removed` satellites (and their edges) unavailable.
/// The input is not modified. Ground cells cannot be removed.
inline SnapshotGraph remove_nodes(const SnapshotGraph& g, std::span<const NodeIndex> removed) {
  for (NodeIndex v : removed) {
    if (v >= g.node_count()) throw ArgumentError("remove_nodes: unknown node index " + std::to_string(v));
    if (g.is_cell(v)) throw ArgumentError("remove_nodes: ground cell '" + g.nodes()[v].id + "' cannot fail");
  }
  SnapshotGraph out = g;
  out.disable_nodes(removed);
  return out;
}

/// No available edge touches an unavailable node.
inline bool availability_consistent(const SnapshotGraph& g) {
  for (NodeIndex u = 0; u < g.node_count(); ++u)
    for (const auto& e : g.edges(u))
      if (e.available && (!g.available(u) || !g.available(e.to))) return false;
  return true;
}

inline nlohmann::ordered_json snapshot_to_json(const SnapshotGraph& g) {
  nlohmann::ordered_json j;
  j["window"] = {{"index", g.window().index}, {"t_start", g.window().t_start}, {"t_end", g.window().t_end}};
  auto nodes = nlohmann::ordered_json::array();
  for (NodeIndex v = 0; v < g.node_count(); ++v)
    nodes.push_back({{"id", g.nodes()[v].id}, {"kind", to_string(g.nodes()[v].kind)}, {"available", g.available(v)}});
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (NodeIndex u = 0; u < g.node_count(); ++u)
    for (const auto& e : g.edges(u))
      edges.push_back({{"from", g.nodes()[u].id},
                       {"to", g.nodes()[e.to].id},
                       {"delay_ms", format_ms(e.delay)},
                       {"available", e.available}});
  j["edges"] = std::move(edges);
  return j;
}

}  // namespace conres
