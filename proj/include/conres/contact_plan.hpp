#pragma once

// Canonical contact-plan model, CSV/JSON ingestion and emission, validation.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "conres/types.hpp"

namespace conres {

struct NodeRecord {
  std::string id;
  NodeKind kind = NodeKind::satellite;
  std::optional<double> lat_deg;
  std::optional<double> lon_deg;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

/// One directed communication opportunity <t_start, t_end, from, to>.
struct Contact {
  double t_start = 0.0;
  double t_end = 0.0;
  NodeIndex from = kNoNode;
  NodeIndex to = kNoNode;
  Delay delay;

  friend bool operator==(const Contact&, const Contact&) = default;
};

/// Canonical ordering: (t_start, from, to) with t_end and delay as final
/// discriminators so the order is total.
inline bool contact_less(const Contact& a, const Contact& b) {
  return std::tie(a.t_start, a.from, a.to, a.t_end, a.delay) <
         std::tie(b.t_start, b.from, b.to, b.t_end, b.delay);
}

struct ContactPlan {
  std::string epoch;  // ISO-8601, informational
  double t0 = 0.0;    // horizon start, seconds relative to epoch
  double t1 = 0.0;    // horizon end
  std::vector<NodeRecord> nodes;  // sorted by id once canonical
  std::vector<Contact> contacts;  // sorted by contact_less once canonical

  std::size_t node_count() const { return nodes.size(); }

  std::optional<NodeIndex> find(std::string_view id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const NodeRecord& n, std::string_view v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) return std::nullopt;
    return static_cast<NodeIndex>(it - nodes.begin());
  }

  NodeIndex index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw ArgumentError("unknown node '" + std::string(id) + "'");
  }

  const NodeRecord& node(NodeIndex i) const { return nodes.at(i); }
  const std::string& id(NodeIndex i) const { return nodes.at(i).id; }
  bool is_cell(NodeIndex i) const { return nodes.at(i).kind == NodeKind::cell; }
  bool is_satellite(NodeIndex i) const { return nodes.at(i).kind == NodeKind::satellite; }

  std::vector<NodeIndex> of_kind(NodeKind k) const {
    std::vector<NodeIndex> out;
    for (NodeIndex i = 0; i < nodes.size(); ++i)
      if (nodes[i].kind == k) out.push_back(i);
    return out;
  }
  std::vector<NodeIndex> satellites() const { return of_kind(NodeKind::satellite); }
  std::vector<NodeIndex> cells() const { return of_kind(NodeKind::cell); }

  friend bool operator==(const ContactPlan&, const ContactPlan&) = default;
};

/// Sorts nodes by id (remapping contact endpoints), then sorts contacts and
/// collapses exact duplicates.
inline void canonicalize(ContactPlan& plan) {
  if (!std::is_sorted(plan.nodes.begin(), plan.nodes.end(),
                      [](const NodeRecord& a, const NodeRecord& b) { return a.id < b.id; })) {
    std::vector<NodeIndex> order(plan.nodes.size());
    for (NodeIndex i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
      return plan.nodes[a].id < plan.nodes[b].id;
    });
    std::vector<NodeIndex> remap(order.size());
    std::vector<NodeRecord> sorted;
    sorted.reserve(order.size());
    for (NodeIndex pos = 0; pos < order.size(); ++pos) {
      remap[order[pos]] = pos;
      sorted.push_back(std::move(plan.nodes[order[pos]]));
    }
    plan.nodes = std::move(sorted);
    for (auto& c : plan.contacts) {
      if (c.from < remap.size()) c.from = remap[c.from];
      if (c.to < remap.size()) c.to = remap[c.to];
    }
  }
  std::sort(plan.contacts.begin(), plan.contacts.end(), contact_less);
  plan.contacts.erase(std::unique(plan.contacts.begin(), plan.contacts.end()), plan.contacts.end());
}

/// Adds the reverse of every contact (same interval and delay), then
/// re-canonicalizes.
inline void mirror_contacts(ContactPlan& plan) {
  const std::size_t n = plan.contacts.size();
  plan.contacts.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    Contact r = plan.contacts[i];
    std::swap(r.from, r.to);
    plan.contacts.push_back(r);
  }
  canonicalize(plan);
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string rule;
  std::string subject;  // offending contact / node rendering
  std::optional<std::size_t> contact_index;

  friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::string describe_contact(const ContactPlan& plan, const Contact& c) {
  auto name = [&](NodeIndex i) {
    return i < plan.nodes.size() ? plan.nodes[i].id : "#" + std::to_string(i);
  };
  return name(c.from) + "->" + name(c.to) + " [" + format_double(c.t_start) + "," +
         format_double(c.t_end) + "]";
}

/// Returns every broken invariant; empty iff the plan is valid.
inline std::vector<Violation> validate(const ContactPlan& plan) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    const auto& id = plan.nodes[i].id;
    if (id.empty() || id.find_first_of(",\n\r\"") != std::string::npos)
      out.push_back({"bad-node-id", id, std::nullopt});
    if (i > 0 && !(plan.nodes[i - 1].id < id))
      out.push_back({id == plan.nodes[i - 1].id ? "duplicate-node-id" : "nodes-unsorted", id,
                     std::nullopt});
    if (plan.nodes[i].lat_deg && std::abs(*plan.nodes[i].lat_deg) > 90.0)
      out.push_back({"latitude-range", id, std::nullopt});
  }
  if (plan.t1 < plan.t0)
    out.push_back({"horizon-reversed", format_double(plan.t0) + "," + format_double(plan.t1),
                   std::nullopt});

  for (std::size_t i = 0; i < plan.contacts.size(); ++i) {
    const Contact& c = plan.contacts[i];
    const std::string what = describe_contact(plan, c);
    const bool known = c.from < plan.nodes.size() && c.to < plan.nodes.size();
    if (!known) out.push_back({"unknown-endpoint", what, i});
    if (c.from == c.to) out.push_back({"self-loop", what, i});
    if (!(c.t_start < c.t_end)) out.push_back({"empty-interval", what, i});
    if (c.delay.us() <= 0) out.push_back({"non-positive-delay", what, i});
    if (c.t_start < plan.t0 || c.t_end > plan.t1) out.push_back({"outside-horizon", what, i});
    if (known && plan.is_cell(c.from) && plan.is_cell(c.to))
      out.push_back({"cell-to-cell-link", what, i});
    if (i > 0 && contact_less(c, plan.contacts[i - 1])) out.push_back({"contacts-unsorted", what, i});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline NodeKind parse_kind(std::string_view s, std::size_t line) {
  if (s == "satellite" || s == "sat") return NodeKind::satellite;
  if (s == "cell" || s == "ground" || s == "ground_cell") return NodeKind::cell;
  throw SchemaError("line " + std::to_string(line) + ": unknown node kind '" + std::string(s) + "'");
}

inline double field_double(std::string_view s, std::size_t line, std::string_view name) {
  double v = 0.0;
  if (!parse_double(s, v))
    throw ParseError(line, "field '" + std::string(name) + "' is not a number: '" + std::string(s) + "'");
  return v;
}

struct RawContact {
  double t_start;
  double t_end;
  std::string from;
  std::string to;
  double delay_ms;
  std::size_t line;
};

/// Resolves ids, checks per-contact invariants (throwing with the contact
/// named), applies the symmetric flag and canonicalizes.
inline ContactPlan assemble(std::string epoch, std::optional<std::pair<double, double>> horizon,
                            std::vector<NodeRecord> nodes, std::vector<RawContact> raw,
                            bool symmetric) {
  ContactPlan plan;
  plan.epoch = std::move(epoch);
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeRecord& a, const NodeRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].id == nodes[i - 1].id) {
      if (nodes[i] == nodes[i - 1]) continue;
      throw ValidationError("node '" + nodes[i].id + "' declared twice with different attributes");
    }
  }
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  plan.nodes = std::move(nodes);

  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& r : raw) {
    auto where = [&] {
      return "line " + std::to_string(r.line) + ": contact " + r.from + "->" + r.to + " [" +
             format_double(r.t_start) + "," + format_double(r.t_end) + "]";
    };
    auto from = plan.find(r.from);
    auto to = plan.find(r.to);
    if (!from || !to) throw ValidationError(where() + ": unknown-endpoint");
    if (!(r.t_start < r.t_end)) throw ValidationError(where() + ": t_start must be < t_end");
    if (*from == *to) throw ValidationError(where() + ": self-loop");
    if (plan.is_cell(*from) && plan.is_cell(*to)) throw ValidationError(where() + ": cell-to-cell-link");
    const Delay d = Delay::from_ms(r.delay_ms);
    if (d.us() <= 0) throw ValidationError(where() + ": delay must be positive");
    plan.contacts.push_back({r.t_start, r.t_end, *from, *to, d});
    lo = first ? r.t_start : std::min(lo, r.t_start);
    hi = first ? r.t_end : std::max(hi, r.t_end);
    first = false;
  }
  if (horizon) {
    plan.t0 = horizon->first;
    plan.t1 = horizon->second;
    if (plan.t1 < plan.t0) throw ValidationError("horizon end precedes start");
    if (!first && (lo < plan.t0 || hi > plan.t1))
      throw ValidationError("contacts extend outside the declared horizon");
  } else {
    plan.t0 = first ? 0.0 : std::min(0.0, lo);
    plan.t1 = first ? 0.0 : hi;
  }
  if (symmetric)
    mirror_contacts(plan);
  else
    canonicalize(plan);
  return plan;
}

}  // namespace detail

/// Parses the sectioned CSV format. `nodes_csv` supplies node declarations
/// when the main document has no `[nodes]` section (sibling-file form).
inline ContactPlan parse_contact_plan_csv(std::istream& in, std::istream* nodes_csv = nullptr) {
  using detail::split_csv;
  using detail::trim;

  enum class Section { none, nodes, contacts };
  Section section = Section::none;
  bool header_seen = false;
  std::string epoch;
  std::optional<std::pair<double, double>> horizon;
  bool symmetric = true;
  std::vector<NodeRecord> nodes;
  std::vector<detail::RawContact> raw;

  auto parse_node_row = [&](const std::vector<std::string_view>& f, std::size_t ln) {
    if (f.size() < 2 || f.size() > 4) throw ParseError(ln, "node row needs id,kind[,lat,lon]");
    if (f[0].empty()) throw ParseError(ln, "empty node id");
    NodeRecord n{std::string(f[0]), detail::parse_kind(f[1], ln), std::nullopt, std::nullopt};
    if (f.size() >= 3 && !f[2].empty()) n.lat_deg = detail::field_double(f[2], ln, "lat");
    if (f.size() >= 4 && !f[3].empty()) n.lon_deg = detail::field_double(f[3], ln, "lon");
    nodes.push_back(std::move(n));
  };

  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      s.remove_prefix(1);
      auto colon = s.find(':');
      if (colon == std::string_view::npos) continue;
      auto key = trim(s.substr(0, colon));
      auto value = trim(s.substr(colon + 1));
      if (key == "epoch") {
        epoch = std::string(value);
      } else if (key == "horizon") {
        auto f = split_csv(value);
        if (f.size() != 2) throw ParseError(ln, "horizon needs two values");
        horizon = {detail::field_double(f[0], ln, "horizon"), detail::field_double(f[1], ln, "horizon")};
      } else if (key == "symmetric") {
        if (value == "true") symmetric = true;
        else if (value == "false") symmetric = false;
        else throw ParseError(ln, "symmetric must be true or false");
      }
      continue;
    }
    if (s == "[nodes]") {
      section = Section::nodes;
      header_seen = false;
      continue;
    }
    if (s == "[contacts]") {
      section = Section::contacts;
      header_seen = false;
      continue;
    }
    if (section == Section::none) section = Section::contacts;  // bare contact file
    auto f = split_csv(s);
    if (!header_seen) {
      header_seen = true;
      if (section == Section::nodes) {
        if (f.size() < 2 || f[0] != "id" || f[1] != "kind") throw ParseError(ln, "expected node header id,kind,lat,lon");
      } else if (f.size() != 5 || f[0] != "t_start" || f[1] != "t_end" || f[2] != "from" ||
                 f[3] != "to" || f[4] != "delay_ms") {
        throw ParseError(ln, "expected contact header t_start,t_end,from,to,delay_ms");
      }
      continue;
    }
    if (section == Section::nodes) {
      parse_node_row(f, ln);
    } else {
      if (f.size() != 5) throw ParseError(ln, "contact row needs 5 fields, got " + std::to_string(f.size()));
      raw.push_back({detail::field_double(f[0], ln, "t_start"), detail::field_double(f[1], ln, "t_end"),
                     std::string(f[2]), std::string(f[3]), detail::field_double(f[4], ln, "delay_ms"), ln});
    }
  }

  if (nodes_csv) {
    std::size_t nl = 0;
    bool hdr = false;
    while (std::getline(*nodes_csv, line)) {
      ++nl;
      auto s = trim(line);
      if (s.empty() || s.front() == '#') continue;
      auto f = split_csv(s);
      if (!hdr) {
        hdr = true;
        if (f.size() < 2 || f[0] != "id" || f[1] != "kind") throw ParseError(nl, "expected node header id,kind,lat,lon");
        continue;
      }
      parse_node_row(f, nl);
    }
  }
  return detail::assemble(std::move(epoch), horizon, std::move(nodes), std::move(raw), symmetric);
}

inline ContactPlan parse_contact_plan_json(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, e.what());
  }
  try {
    std::string epoch = j.value("epoch", std::string{});
    std::optional<std::pair<double, double>> horizon;
    if (j.contains("horizon")) {
      const auto& h = j.at("horizon");
      if (!h.is_array() || h.size() != 2) throw SchemaError("horizon must be [t0, t1]");
      horizon = {h[0].get<double>(), h[1].get<double>()};
    }
    const bool symmetric = j.value("symmetric", true);
    std::vector<NodeRecord> nodes;
    for (const auto& n : j.value("nodes", nlohmann::json::array())) {
      NodeRecord r{n.at("id").get<std::string>(), detail::parse_kind(n.at("kind").get<std::string>(), 0),
                   std::nullopt, std::nullopt};
      if (n.contains("lat") && !n["lat"].is_null()) r.lat_deg = n["lat"].get<double>();
      if (n.contains("lon") && !n["lon"].is_null()) r.lon_deg = n["lon"].get<double>();
      nodes.push_back(std::move(r));
    }
    std::vector<detail::RawContact> raw;
    std::size_t k = 0;
    for (const auto& c : j.value("contacts", nlohmann::json::array())) {
      raw.push_back({c.at("t_start").get<double>(), c.at("t_end").get<double>(), c.at("from").get<std::string>(),
                     c.at("to").get<std::string>(), c.at("delay_ms").get<double>(), ++k});
    }
    return detail::assemble(std::move(epoch), horizon, std::move(nodes), std::move(raw), symmetric);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("contact plan json: ") + e.what());
  }
}

enum class PlanFormat { csv, json };

inline ContactPlan parse_contact_plan(std::istream& in, PlanFormat fmt) {
  return fmt == PlanFormat::csv ? parse_contact_plan_csv(in) : parse_contact_plan_json(in);
}

inline ContactPlan parse_contact_plan(std::string_view text, PlanFormat fmt) {
  std::istringstream in{std::string(text)};
  return parse_contact_plan(in, fmt);
}

// ---------------------------------------------------------------------------
// Emission (canonical, byte-stable, LF endings)

inline std::string emit_contact_plan_csv(const ContactPlan& plan) {
  std::string out;
  out += "# format: conres-contact-plan/1\n";
  out += "# epoch: " + plan.epoch + "\n";
  out += "# horizon: " + format_double(plan.t0) + "," + format_double(plan.t1) + "\n";
  out += "# symmetric: false\n";
  out += "[nodes]\nid,kind,lat,lon\n";
  for (const auto& n : plan.nodes) {
    out += n.id;
    out += ',';
    out += to_string(n.kind);
    out += ',';
    if (n.lat_deg) out += format_double(*n.lat_deg);
    out += ',';
    if (n.lon_deg) out += format_double(*n.lon_deg);
    out += '\n';
  }
  out += "[contacts]\nt_start,t_end,from,to,delay_ms\n";
  for (const auto& c : plan.contacts) {
    out += format_double(c.t_start);
    out += ',';
    out += format_double(c.t_end);
    out += ',';
    out += plan.id(c.from);
    out += ',';
    out += plan.id(c.to);
    out += ',';
    out += format_ms(c.delay);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json contact_plan_to_json(const ContactPlan& plan) {
  nlohmann::ordered_json j;
  j["format"] = "conres-contact-plan/1";
  j["epoch"] = plan.epoch;
  j["horizon"] = {plan.t0, plan.t1};
  j["symmetric"] = false;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : plan.nodes) {
    nlohmann::ordered_json r;
    r["id"] = n.id;
    r["kind"] = to_string(n.kind);
    r["lat"] = n.lat_deg ? nlohmann::ordered_json(*n.lat_deg) : nlohmann::ordered_json(nullptr);
    r["lon"] = n.lon_deg ? nlohmann::ordered_json(*n.lon_deg) : nlohmann::ordered_json(nullptr);
    nodes.push_back(std::move(r));
  }
  j["nodes"] = std::move(nodes);
  auto contacts = nlohmann::ordered_json::array();
  for (const auto& c : plan.contacts) {
    nlohmann::ordered_json r;
    r["t_start"] = c.t_start;
    r["t_end"] = c.t_end;
    r["from"] = plan.id(c.from);
    r["to"] = plan.id(c.to);
    r["delay_ms"] = c.delay.ms();
    contacts.push_back(std::move(r));
  }
  j["contacts"] = std::move(contacts);
  return j;
}

inline std::string emit_contact_plan_json(const ContactPlan& plan) {
  return contact_plan_to_json(plan).dump(2) + "\n";
}

inline std::string emit_contact_plan(const ContactPlan& plan, PlanFormat fmt) {
  return fmt == PlanFormat::csv ? emit_contact_plan_csv(plan) : emit_contact_plan_json(plan);
}

}  // namespace conres
