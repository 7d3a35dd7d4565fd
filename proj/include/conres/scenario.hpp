#pragma once

// Scenario configuration and the generate / analyze / fail / report runs
// behind the command-line tool. Every run writes its artifacts through an
// ArtifactWriter, which records content hashes for manifest.json.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "conres/contact_plan.hpp"
#include "conres/failure.hpp"
#include "conres/log.hpp"
#include "conres/orbital.hpp"
#include "conres/report.hpp"
#include "conres/routing.hpp"
#include "conres/satb.hpp"
#include "conres/temporal_graph.hpp"
#include "conres/types.hpp"

namespace conres {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("cannot create output directory '" + root_.string() + "': " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }

  void write(const std::string& relative, std::string_view content) {
    write_text_file(root_ / relative, content);
    files_[relative] = {sha256_hex(content), content.size()};
    log::debug("wrote " + (root_ / relative).string());
  }

  /// manifest.json: artifact paths (relative, sorted), sizes and hashes.
  std::string manifest(std::string_view command, const nlohmann::ordered_json& params) const {
    nlohmann::ordered_json j;
    j["tool"] = "conres";
    j["manifest_version"] = 1;
    j["command"] = command;
    j["parameters"] = params;
    auto files = nlohmann::ordered_json::array();
    for (const auto& [path, info] : files_)
      files.push_back({{"path", path}, {"bytes", info.second}, {"sha256", info.first}});
    j["files"] = std::move(files);
    return j.dump(2) + "\n";
  }

  void write_manifest(std::string_view command, const nlohmann::ordered_json& params) {
    write_text_file(root_ / "manifest.json", manifest(command, params));
  }

 private:
  std::filesystem::path root_;
  std::map<std::string, std::pair<std::string, std::size_t>> files_;
};

// ---------------------------------------------------------------------------

struct ScenarioConfig {
  std::optional<ConstellationConfig> constellation;
  std::optional<std::filesystem::path> contact_plan_path;
  std::vector<std::string> active_cells;  // empty: every cell of the plan
  bool full_mesh = true;
  std::vector<std::pair<std::string, std::string>> pairs;
  double threshold_s = 60.0;
  DelayMode delay_mode = DelayMode::uniform;
  std::uint64_t seed = 1;
  std::vector<EventDescriptor> events;
  unsigned jobs = 1;
};

struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold_s;
  std::optional<DelayMode> delay_mode;
  std::optional<unsigned> jobs;
};

inline nlohmann::json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string(what), std::string("invalid JSON: ") + e.what());
  }
}

/// A scenario document. A bare constellation config (top-level "layers")
/// is accepted as a scenario with default analysis settings.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("scenario", "must be a JSON object");
  ScenarioConfig s;
  try {
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
      s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("delay_mode")) s.delay_mode = parse_delay_mode(j.at("delay_mode").get<std::string>());
    if (j.contains("threshold_s")) {
      if (!j.at("threshold_s").is_number()) throw ConfigError("threshold_s", "must be a number");
      s.threshold_s = j.at("threshold_s").get<double>();
    }
    if (j.contains("jobs")) s.jobs = j.at("jobs").get<unsigned>();

    const bool has_constellation = j.contains("constellation") || j.contains("layers");
    const bool has_plan = j.contains("contact_plan");
    if (has_constellation == has_plan)
      throw ConfigError("constellation", "exactly one of 'constellation' and 'contact_plan' is required");
    if (has_plan) {
      s.contact_plan_path = base_dir / j.at("contact_plan").get<std::string>();
    } else {
      const auto& cj = j.contains("constellation") ? j.at("constellation") : j;
      s.constellation = constellation_config_from_json(cj);
      if (!j.contains("seed") && cj.contains("seed")) s.seed = s.constellation->seed;
      if (!j.contains("delay_mode") && cj.contains("delay_mode")) s.delay_mode = s.constellation->delay_mode;
    }

    if (j.contains("active_cells")) {
      if (!j.at("active_cells").is_array()) throw ConfigError("active_cells", "must be a list of cell ids");
      s.active_cells = j.at("active_cells").get<std::vector<std::string>>();
    }
    if (j.contains("demand")) {
      const auto& d = j.at("demand");
      if (d.is_string()) {
        if (d.get<std::string>() != "full_mesh") throw ConfigError("demand", "must be \"full_mesh\" or {\"pairs\": [...]}");
      } else if (d.is_object() && d.contains("pairs")) {
        s.full_mesh = false;
        std::size_t i = 0;
        for (const auto& p : d.at("pairs")) {
          if (!p.is_array() || p.size() != 2)
            throw ConfigError("demand.pairs[" + std::to_string(i) + "]", "must be [cell, cell]");
          s.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
          ++i;
        }
      } else {
        throw ConfigError("demand", "must be \"full_mesh\" or {\"pairs\": [...]}");
      }
    }
    if (j.contains("events")) {
      if (!j.at("events").is_array()) throw ConfigError("events", "must be a list");
      s.events = event_descriptors_from_json(j.at("events"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario", e.what());
  }
  if (!(s.threshold_s > 0.0)) throw ConfigError("threshold_s", "must be > 0");
  for (auto& e : s.events)
    if (!e.geo_seed_given) e.geo.seed = s.seed;
  return s;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  return scenario_from_json(parse_json_text(text, path.string()), path.parent_path());
}

inline void apply_overrides(ScenarioConfig& s, const ScenarioOverrides& o) {
  if (o.seed) s.seed = *o.seed;
  if (o.threshold_s) {
    if (!(*o.threshold_s > 0.0)) throw ConfigError("threshold_s", "must be > 0");
    s.threshold_s = *o.threshold_s;
  }
  if (o.delay_mode) s.delay_mode = *o.delay_mode;
  if (o.jobs) s.jobs = std::max(1u, *o.jobs);
  for (auto& e : s.events)
    if (!e.geo_seed_given) e.geo.seed = s.seed;
  if (s.constellation) {
    s.constellation->seed = s.seed;
    s.constellation->delay_mode = s.delay_mode;
  }
}

/// Everything derived from a scenario before any failure is applied.
struct PreparedScenario {
  ContactPlan plan;
  std::vector<Satellite> satellites;  // empty when loaded from a plan file
  std::vector<GroundCell> cells;
  ServiceDemand demand;
  std::vector<SnapshotGraph> graphs;
};

inline PlanFormat plan_format_for(const std::filesystem::path& p) {
  return p.extension() == ".json" ? PlanFormat::json : PlanFormat::csv;
}

inline ContactPlan load_contact_plan(const std::filesystem::path& p) {
  return parse_contact_plan(read_text_file(p), plan_format_for(p));
}

inline ContactPlan generate_plan(const ConstellationConfig& cfg, std::vector<Satellite>* sats_out = nullptr) {
  validate_config(cfg);
  auto sats = generate_walker(cfg);
  log::info("propagating " + std::to_string(sats.size()) + " satellites, " + std::to_string(cfg.cells.size()) +
            " cells over " + format_double(cfg.horizon_s) + " s");
  auto plan = compute_contacts(sats, cfg);
  if (sats_out) *sats_out = std::move(sats);
  return plan;
}

inline ServiceDemand build_demand(const ScenarioConfig& s, const ContactPlan& plan) {
  std::vector<NodeIndex> active;
  if (s.active_cells.empty()) {
    active = plan.cells();
  } else {
    for (std::size_t i = 0; i < s.active_cells.size(); ++i) {
      auto idx = plan.find(s.active_cells[i]);
      if (!idx || !plan.is_cell(*idx))
        throw ConfigError("active_cells[" + std::to_string(i) + "]", "'" + s.active_cells[i] + "' is not a declared cell");
      active.push_back(*idx);
    }
  }
  if (s.full_mesh) return ServiceDemand::full_mesh(std::move(active));
  std::vector<ServicePair> pairs;
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    const std::string field = "demand.pairs[" + std::to_string(i) + "]";
    auto a = plan.find(s.pairs[i].first);
    auto b = plan.find(s.pairs[i].second);
    if (!a || !plan.is_cell(*a)) throw ConfigError(field, "'" + s.pairs[i].first + "' is not a declared cell");
    if (!b || !plan.is_cell(*b)) throw ConfigError(field, "'" + s.pairs[i].second + "' is not a declared cell");
    if (*a == *b) throw ConfigError(field, "a pair must join two distinct cells");
    if (std::find(active.begin(), active.end(), *a) == active.end() ||
        std::find(active.begin(), active.end(), *b) == active.end())
      throw ConfigError(field, "pair references an inactive cell");
    pairs.push_back({*a, *b});
  }
  return ServiceDemand::from_pairs(std::move(active), pairs);
}

inline PreparedScenario prepare(const ScenarioConfig& s) {
  PreparedScenario p;
  if (s.constellation) {
    p.plan = generate_plan(*s.constellation, &p.satellites);
    p.cells = s.constellation->cells;
  } else {
    p.plan = load_contact_plan(*s.contact_plan_path);
    if (auto v = validate(p.plan); !v.empty())
      throw ValidationError("contact plan: " + v.front().rule + " (" + v.front().subject + ")");
    p.cells = cells_from_plan(p.plan);
  }
  p.demand = build_demand(s, p.plan);
  p.graphs = build_temporal_graphs(p.plan, s.threshold_s);
  log::info(std::to_string(p.graphs.size()) + " windows, " + std::to_string(p.demand.size()) + " service pairs");
  return p;
}

// ---------------------------------------------------------------------------
// Artifact text

inline std::string windows_csv(std::span<const SnapshotGraph> graphs) {
  std::string out = "window_index,t_start,t_end,edge_count\n";
  for (const auto& g : graphs)
    out += std::to_string(g.window().index) + ',' + format_double(g.window().t_start) + ',' +
           format_double(g.window().t_end) + ',' + std::to_string(g.edge_count()) + '\n';
  return out;
}

inline std::string paths_csv(const RoutingTable& paths, const ServiceDemand& demand, const std::vector<NodeRecord>& nodes) {
  std::string out = "window_index,src,dst,delay_ms,hops\n";
  for (std::size_t x = 0; x < paths.size(); ++x) {
    for (std::size_t k = 0; k < demand.size(); ++k) {
      const auto& pr = demand.pairs()[k];
      out += std::to_string(x) + ',' + nodes[pr.src].id + ',' + nodes[pr.dst].id + ',';
      if (paths[x][k]) out += format_ms(paths[x][k]->delay) + ',' + path_to_string(nodes, *paths[x][k]);
      else out += ',';
      out += '\n';
    }
  }
  return out;
}

inline std::string path_index_csv(const PathIndex& index, const ServiceDemand& demand,
                                   const std::vector<NodeRecord>& nodes) {
  std::string out = "window_index,satellite,src,dst\n";
  for (std::size_t x = 0; x < index.windows(); ++x)
    for (const auto& [sat, pairs] : index.window_entries(x))
      for (std::size_t k : pairs)
        out += std::to_string(x) + ',' + nodes[sat].id + ',' + nodes[demand.pairs()[k].src].id + ',' +
               nodes[demand.pairs()[k].dst].id + '\n';
  return out;
}

inline std::string affected_paths_csv(const ImpactReport& r, const ServiceDemand& demand,
                                      const std::vector<NodeRecord>& nodes) {
  std::string out = "window_index,src,dst,pre_delay_ms,post_delay_ms\n";
  for (const auto& [key, change] : r.affected_paths) {
    const auto& pr = demand.pairs()[key.pair];
    out += std::to_string(key.window) + ',' + nodes[pr.src].id + ',' + nodes[pr.dst].id + ',' + format_ms(change.pre) +
           ',' + format_ms(change.post) + '\n';
  }
  return out;
}

inline std::string node_list_csv(std::string_view header, std::span<const NodeIndex> v, const std::vector<NodeRecord>& nodes) {
  std::string out = std::string(header) + "\n";
  for (NodeIndex i : v) out += nodes[i].id + '\n';
  return out;
}

inline std::string sanitize_name(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "event" : out;
}

inline nlohmann::ordered_json scenario_parameters(const ScenarioConfig& s, const PreparedScenario& p) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["threshold_s"] = s.threshold_s;
  j["delay_mode"] = to_string(s.delay_mode);
  j["source"] = s.constellation ? "constellation" : "contact_plan";
  j["nodes"] = p.plan.nodes.size();
  j["contacts"] = p.plan.contacts.size();
  j["windows"] = p.graphs.size();
  j["service_pairs"] = p.demand.size();
  return j;
}

// ---------------------------------------------------------------------------
// Runs

inline void run_generate(const ConstellationConfig& cfg, const std::filesystem::path& out_dir, PlanFormat fmt) {
  const ContactPlan plan = generate_plan(cfg);
  ArtifactWriter w(out_dir);
  w.write(fmt == PlanFormat::csv ? "contact_plan.csv" : "contact_plan.json", emit_contact_plan(plan, fmt));
  nlohmann::ordered_json params;
  params["seed"] = cfg.seed;
  params["delay_mode"] = to_string(cfg.delay_mode);
  params["nodes"] = plan.nodes.size();
  params["contacts"] = plan.contacts.size();
  w.write_manifest("generate", params);
}

inline std::vector<MetricSeries> baseline_series(const PreparedScenario& p, const CriticalAnalysis& a) {
  const auto windows = windows_of(p.graphs);
  return {critical_count_series(a.matrix, windows), mean_delay_series(a.paths, windows),
          connectivity_series(a.paths, windows, p.demand.size())};
}

inline void write_baseline(ArtifactWriter& w, const std::string& prefix, const PreparedScenario& p,
                           const CriticalAnalysis& a) {
  const auto& nodes = p.plan.nodes;
  w.write(prefix + "windows.csv", windows_csv(p.graphs));
  w.write(prefix + "satb_matrix.csv", satb_matrix_csv(a.matrix, nodes));
  w.write(prefix + "ranking.csv", ranking_csv(a.ranking, nodes));
  w.write(prefix + "path_index.csv", path_index_csv(a.index, p.demand, nodes));
  w.write(prefix + "paths.csv", paths_csv(a.paths, p.demand, nodes));
  const auto series = baseline_series(p, a);
  for (const auto& s : series) w.write(prefix + "series/" + s.name + ".csv", series_csv(s));
  w.write(prefix + "report.json", series_set_json(series));
}

inline CriticalAnalysis run_analyze(const ScenarioConfig& s, const std::filesystem::path& out_dir) {
  const PreparedScenario p = prepare(s);
  auto a = rank_critical(p.graphs, p.demand, s.jobs);
  ArtifactWriter w(out_dir);
  w.write("contact_plan.csv", emit_contact_plan_csv(p.plan));
  write_baseline(w, "", p, a);
  w.write_manifest("analyze", scenario_parameters(s, p));
  return a;
}

inline FailureEvent resolve_event(const EventDescriptor& d, const PreparedScenario& p, const CriticalAnalysis& baseline,
                                  std::size_t position) {
  const std::string where = "events[" + std::to_string(position) + "]";
  if (p.graphs.empty() || d.t_f < p.graphs.front().window().t_start || d.t_f > p.graphs.back().window().t_end)
    throw ConfigError(where + ".t_f", "lies outside the plan horizon");
  switch (d.kind) {
    case FailureKind::explicit_set: {
      std::vector<NodeIndex> failed;
      for (const auto& id : d.ids) {
        auto idx = p.plan.find(id);
        if (!idx) throw ConfigError(where + ".ids", "unknown satellite '" + id + "'");
        if (!p.plan.is_satellite(*idx)) throw ConfigError(where + ".ids", "'" + id + "' is a ground cell");
        failed.push_back(*idx);
      }
      if (failed.empty()) throw ConfigError(where + ".ids", "empty failed set");
      return explicit_failure(d.t_f, std::move(failed));
    }
    case FailureKind::top_k:
      if (d.top_k == 0) throw ConfigError(where + ".top_k", "must be >= 1");
      return top_k_failure(d.t_f, d.top_k, p.graphs, baseline.ranking);
    case FailureKind::geo_cluster:
      if (p.satellites.empty())
        throw ConfigError(where + ".kind", "geo events need satellite geometry (use a constellation config)");
      if (!(d.geo.radius_km > 0.0)) throw ConfigError(where + ".geo.radius_km", "must be > 0");
      if (d.geo.count == 0) throw ConfigError(where + ".geo.count", "must be >= 1");
      return geo_cluster_failure(p.plan, p.satellites, p.cells, d.t_f, d.geo);
  }
  throw ConfigError(where + ".kind", "unsupported");
}

inline std::string event_json(const EventDescriptor& d, const FailureEvent& e, const ImpactReport& r,
                              const std::vector<NodeRecord>& nodes) {
  nlohmann::ordered_json j;
  j["name"] = d.name;
  j["t_f"] = e.t_f;
  j["kind"] = to_string(e.kind);
  j["failure_window"] = r.failure_window;
  j["noop"] = r.noop;
  if (e.kind == FailureKind::top_k) j["top_k"] = e.top_k;
  if (e.geo) {
    nlohmann::ordered_json g;
    g["cells"] = e.geo->cells;
    g["count"] = e.geo->count;
    g["radius_km"] = e.geo->radius_km;
    g["altitude_km"] = e.geo->altitude_km;
    g["seed"] = e.geo->seed;
    auto regions = nlohmann::ordered_json::array();
    for (const auto& reg : e.regions)
      regions.push_back({{"center_cell", reg.center_cell}, {"center_km", {reg.center.x, reg.center.y, reg.center.z}}});
    g["regions"] = std::move(regions);
    j["geo"] = std::move(g);
  }
  auto failed = nlohmann::ordered_json::array();
  for (NodeIndex v : e.failed) failed.push_back(nodes[v].id);
  j["failed"] = std::move(failed);
  j["affected_path_count"] = r.affected_paths.size();
  auto affected = nlohmann::ordered_json::array();
  for (NodeIndex v : r.affected_nodes) affected.push_back(nodes[v].id);
  j["affected_nodes"] = std::move(affected);
  return j.dump(2) + "\n";
}

inline std::vector<MetricSeries> impact_series(const PreparedScenario& p, const ImpactReport& r, const std::string& event) {
  const auto windows = windows_of(p.graphs);
  std::vector<MetricSeries> set{eta_series(r.eta_no_reroute, windows, "eta_no_reroute"),
                                eta_series(r.eta_with_reroute, windows, "eta_with_reroute"),
                                mean_delay_series(r.paths, windows, "mean_delay_rerouted"),
                                critical_count_series(r.matrix, windows)};
  set.back().name = "critical_count_rerouted";
  for (auto& s : set) s.metadata["event"] = event;
  return set;
}

struct FailOutcome {
  CriticalAnalysis baseline;
  std::vector<FailureEvent> events;
  std::vector<ImpactReport> reports;
};

inline FailOutcome run_fail(const ScenarioConfig& s, const std::filesystem::path& out_dir) {
  if (s.events.empty()) throw ConfigError("events", "no failure events given");
  const PreparedScenario p = prepare(s);
  FailOutcome out;
  out.baseline = rank_critical(p.graphs, p.demand, s.jobs);
  ArtifactWriter w(out_dir);
  write_baseline(w, "baseline/", p, out.baseline);
  const auto& nodes = p.plan.nodes;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& d = s.events[i];
    FailureEvent e = resolve_event(d, p, out.baseline, i);
    if (e.is_noop()) log::warn("event '" + d.name + "' fails no satellite (no-op)");
    ImpactReport r = evaluate_failure(p.graphs, p.demand, out.baseline, e, s.jobs);
    char prefix_buf[16];
    std::snprintf(prefix_buf, sizeof prefix_buf, "%03zu_", i);
    const std::string dir = "events/" + std::string(prefix_buf) + sanitize_name(d.name) + "/";
    w.write(dir + "event.json", event_json(d, e, r, nodes));
    w.write(dir + "failed.csv", node_list_csv("satellite", e.failed, nodes));
    w.write(dir + "affected_nodes.csv", node_list_csv("satellite", r.affected_nodes, nodes));
    w.write(dir + "affected_paths.csv", affected_paths_csv(r, p.demand, nodes));
    w.write(dir + "satb_matrix.csv", satb_matrix_csv(r.matrix, nodes));
    w.write(dir + "paths.csv", paths_csv(r.paths, p.demand, nodes));
    const auto series = impact_series(p, r, d.name);
    for (const auto& ms : series) w.write(dir + "series/" + ms.name + ".csv", series_csv(ms));
    w.write(dir + "report.json", series_set_json(series));
    log::info("event '" + d.name + "': " + std::to_string(e.failed.size()) + " failed, " +
              std::to_string(r.affected_paths.size()) + " affected paths");
    out.events.push_back(std::move(e));
    out.reports.push_back(std::move(r));
  }
  w.write_manifest("fail", scenario_parameters(s, p));
  return out;
}

/// Collects every series CSV under `in_dir` (recursively, path order) into
/// one set. Series names are prefixed with their directory.
inline std::vector<MetricSeries> collect_series(const std::filesystem::path& in_dir) {
  if (!std::filesystem::is_directory(in_dir)) throw IoError("'" + in_dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(in_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv" && entry.path().parent_path().filename() == "series")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<MetricSeries> set;
  for (const auto& f : files) {
    MetricSeries s = parse_series_csv(read_text_file(f));
    const auto rel = std::filesystem::relative(f.parent_path().parent_path(), in_dir).generic_string();
    if (rel != "." && !rel.empty()) s.name = rel + "/" + s.name;
    set.push_back(std::move(s));
  }
  return set;
}

inline std::string run_report(const std::filesystem::path& in_dir, ReportFormat fmt) {
  return emit(collect_series(in_dir), fmt);
}

}  // namespace conres
