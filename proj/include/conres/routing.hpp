#pragma once

// Per-window shortest-delay routing between ground cells.
//
// Paths are ordered by (total delay, hop count, hop-id sequence). The order
// is total and preserved under extension by a common edge, so Dijkstra with
// this label order returns the unique minimum, and every prefix of a
// returned path is itself the minimum path to its endpoint. Ground cells
// other than the source are never expanded: interiors are satellites only.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "conres/contact_plan.hpp"
#include "conres/temporal_graph.hpp"
#include "conres/types.hpp"

namespace conres {

struct ServicePair {
  NodeIndex src = kNoNode;
  NodeIndex dst = kNoNode;

  friend auto operator<=>(const ServicePair&, const ServicePair&) = default;
};

/// The designated service set H: unordered cell pairs, each stored once
/// with src < dst and kept sorted.
class ServiceDemand {
 public:
  ServiceDemand() = default;

  /// Every unordered pair of distinct active cells.
  static ServiceDemand full_mesh(std::vector<NodeIndex> active) {
    ServiceDemand d;
    d.set_active(std::move(active));
    for (std::size_t i = 0; i < d.active_.size(); ++i)
      for (std::size_t j = i + 1; j < d.active_.size(); ++j) d.pairs_.push_back({d.active_[i], d.active_[j]});
    return d;
  }

  /// Explicit pairs; (a, b) and (b, a) denote the same service.
  static ServiceDemand from_pairs(std::vector<NodeIndex> active, std::span<const ServicePair> pairs) {
    ServiceDemand d;
    d.set_active(std::move(active));
    for (auto p : pairs) {
      if (p.src == p.dst) throw ArgumentError("service pair must join two distinct cells");
      if (!std::binary_search(d.active_.begin(), d.active_.end(), p.src) ||
          !std::binary_search(d.active_.begin(), d.active_.end(), p.dst))
        throw ArgumentError("service pair references an inactive cell");
      if (p.dst < p.src) std::swap(p.src, p.dst);
      d.pairs_.push_back(p);
    }
    std::sort(d.pairs_.begin(), d.pairs_.end());
    d.pairs_.erase(std::unique(d.pairs_.begin(), d.pairs_.end()), d.pairs_.end());
    return d;
  }

  /// Indicator-matrix form over `active` (row/column order as given).
  static ServiceDemand from_matrix(const std::vector<NodeIndex>& active, const std::vector<std::vector<bool>>& ind) {
    const std::size_t n = active.size();
    if (ind.size() != n) throw ArgumentError("demand matrix size mismatch");
    std::vector<ServicePair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      if (ind[i].size() != n) throw ArgumentError("demand matrix is not square");
      if (ind[i][i]) throw ArgumentError("demand matrix diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        if (ind[i][j] != ind[j][i]) throw ArgumentError("demand matrix must be symmetric");
        if (i < j && ind[i][j]) pairs.push_back({active[i], active[j]});
      }
    }
    return from_pairs(active, pairs);
  }

  const std::vector<NodeIndex>& active_cells() const { return active_; }
  const std::vector<ServicePair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  std::optional<std::size_t> pair_index(NodeIndex a, NodeIndex b) const {
    ServicePair p{std::min(a, b), std::max(a, b)};
    auto it = std::lower_bound(pairs_.begin(), pairs_.end(), p);
    if (it == pairs_.end() || *it != p) return std::nullopt;
    return static_cast<std::size_t>(it - pairs_.begin());
  }

  /// Throws unless every demand cell is a ground cell of the plan.
  void check_against(const std::vector<NodeRecord>& nodes) const {
    for (NodeIndex c : active_) {
      if (c >= nodes.size()) throw ArgumentError("demand references unknown node index " + std::to_string(c));
      if (nodes[c].kind != NodeKind::cell)
        throw ArgumentError("demand endpoint '" + nodes[c].id + "' is not a ground cell");
    }
  }

  friend bool operator==(const ServiceDemand&, const ServiceDemand&) = default;

 private:
  void set_active(std::vector<NodeIndex> active) {
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    active_ = std::move(active);
  }

  std::vector<NodeIndex> active_;
  std::vector<ServicePair> pairs_;
};

struct ServicePath {
  std::size_t window = 0;
  NodeIndex src = kNoNode;
  NodeIndex dst = kNoNode;
  std::vector<NodeIndex> hops;  // src ... dst
  Delay delay;

  std::span<const NodeIndex> interior() const {
    if (hops.size() < 2) return {};
    return std::span<const NodeIndex>(hops).subspan(1, hops.size() - 2);
  }
  bool traverses(NodeIndex v) const {
    auto in = interior();
    return std::find(in.begin(), in.end(), v) != in.end();
  }

  friend bool operator==(const ServicePath&, const ServicePath&) = default;
};

/// The routing order: delay, then edge count, then hop-id sequence.
inline bool path_order_less(Delay da, std::span<const NodeIndex> a, Delay db, std::span<const NodeIndex> b) {
  if (da != db) return da < db;
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// All service paths of one window, aligned with ServiceDemand::pairs().
using WindowPaths = std::vector<std::optional<ServicePath>>;

namespace detail {

/// Single-source search with the routing order; settled nodes carry their
/// full hop sequence.
class RouteSearch {
 public:
  RouteSearch(const SnapshotGraph& g, NodeIndex src) : g_(g), src_(src) {
    const std::size_t n = g.node_count();
    delay_.assign(n, Delay::infinite());
    hops_.assign(n, 0);
    pred_.assign(n, kNoNode);
    settled_.assign(n, 0);
    seq_.resize(n);
  }

  /// Runs until `stop` is settled (or exhaustion when stop == kNoNode).
  void run(NodeIndex stop = kNoNode) {
    using Item = std::tuple<Delay, std::uint32_t, NodeIndex>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    delay_[src_] = Delay::from_us(0);
    pq.emplace(delay_[src_], 0u, src_);
    while (!pq.empty()) {
      auto [d, h, u] = pq.top();
      pq.pop();
      if (settled_[u] || d != delay_[u] || h != hops_[u]) continue;
      settled_[u] = 1;
      if (u != src_) {
        seq_[u] = seq_[pred_[u]];
        seq_[u].push_back(u);
      } else {
        seq_[u] = {u};
      }
      if (u == stop) return;
      if (u != src_ && g_.is_cell(u)) continue;  // cells never relay
      for (const Edge& e : g_.edges(u)) {
        const NodeIndex v = e.to;
        if (!e.available || !g_.available(v) || settled_[v]) continue;
        const Delay nd = d + e.delay;
        const std::uint32_t nh = h + 1;
        if (std::tie(nd, nh) < std::tie(delay_[v], hops_[v])) {
          delay_[v] = nd;
          hops_[v] = nh;
          pred_[v] = u;
          pq.emplace(nd, nh, v);
        } else if (nd == delay_[v] && nh == hops_[v] &&
                   std::lexicographical_compare(seq_[u].begin(), seq_[u].end(), seq_[pred_[v]].begin(),
                                                seq_[pred_[v]].end())) {
          pred_[v] = u;
        }
      }
    }
  }

  std::optional<ServicePath> path_to(NodeIndex dst) const {
    if (!settled_[dst]) return std::nullopt;
    return ServicePath{g_.window().index, src_, dst, seq_[dst], delay_[dst]};
  }

 private:
  const SnapshotGraph& g_;
  NodeIndex src_;
  std::vector<Delay> delay_;
  std::vector<std::uint32_t> hops_;
  std::vector<NodeIndex> pred_;
  std::vector<std::uint8_t> settled_;
  std::vector<std::vector<NodeIndex>> seq_;
};

inline void check_endpoint(const SnapshotGraph& g, NodeIndex v) {
  if (v >= g.node_count()) throw ArgumentError("shortest_path: unknown node index " + std::to_string(v));
  if (!g.is_cell(v)) throw ArgumentError("shortest_path: '" + g.nodes()[v].id + "' is not a ground cell");
}

}  // namespace detail

/// Minimum path src -> dst under the routing order, or nullopt when dst is
/// unreachable through available satellites.
inline std::optional<ServicePath> shortest_path(const SnapshotGraph& g, NodeIndex src, NodeIndex dst) {
  detail::check_endpoint(g, src);
  detail::check_endpoint(g, dst);
  if (src == dst) throw ArgumentError("shortest_path: source equals destination");
  detail::RouteSearch search(g, src);
  search.run(dst);
  return search.path_to(dst);
}

/// One entry per service pair (index-aligned with demand.pairs()). One
/// search per distinct source cell.
inline WindowPaths all_service_paths(const SnapshotGraph& g, const ServiceDemand& demand) {
  demand.check_against(g.nodes());
  WindowPaths out(demand.size());
  const auto& pairs = demand.pairs();
  std::size_t i = 0;
  while (i < pairs.size()) {
    const NodeIndex src = pairs[i].src;
    detail::RouteSearch search(g, src);
    search.run();
    for (; i < pairs.size() && pairs[i].src == src; ++i) out[i] = search.path_to(pairs[i].dst);
  }
  return out;
}

/// Sum of the window's edge delays along the path.
inline Delay path_delay(const SnapshotGraph& g, const ServicePath& p) {
  Delay total = Delay::from_us(0);
  for (std::size_t k = 1; k < p.hops.size(); ++k) {
    auto d = g.edge_delay(p.hops[k - 1], p.hops[k]);
    if (!d) throw ArgumentError("path_delay: hop " + std::to_string(k) + " is not an available edge");
    total += *d;
  }
  return total;
}

struct UndefinedRatioError : Error {
  UndefinedRatioError() : Error("connectivity ratio undefined: no service pairs") {}
};

/// Percentage of pairs with a path.
inline double connectivity_ratio(const WindowPaths& paths) {
  if (paths.empty()) throw UndefinedRatioError();
  std::size_t routed = 0;
  for (const auto& p : paths) routed += p.has_value() ? 1 : 0;
  return 100.0 * static_cast<double>(routed) / static_cast<double>(paths.size());
}

inline std::size_t routed_count(const WindowPaths& paths) {
  return static_cast<std::size_t>(std::count_if(paths.begin(), paths.end(), [](const auto& p) { return p.has_value(); }));
}

inline std::string path_to_string(const std::vector<NodeRecord>& nodes, const ServicePath& p) {
  std::string s;
  for (std::size_t k = 0; k < p.hops.size(); ++k) {
    if (k) s += '>';
    s += nodes[p.hops[k]].id;
  }
  return s;
}

}  // namespace conres
