#pragma once

// Per-window metric series and their canonical CSV / JSON forms.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conres/contact_plan.hpp"
#include "conres/failure.hpp"
#include "conres/routing.hpp"
#include "conres/satb.hpp"
#include "conres/temporal_graph.hpp"
#include "conres/types.hpp"

namespace conres {

enum class Unit { count, percent, ms };

inline std::string_view to_string(Unit u) {
  switch (u) {
    case Unit::count: return "count";
    case Unit::percent: return "percent";
    case Unit::ms: return "ms";
  }
  return "?";
}

inline Unit parse_unit(std::string_view s) {
  if (s == "count") return Unit::count;
  if (s == "percent") return Unit::percent;
  if (s == "ms") return Unit::ms;
  throw SchemaError("unknown unit '" + std::string(s) + "'");
}

inline int unit_decimals(Unit u) {
  switch (u) {
    case Unit::count: return 0;
    case Unit::percent: return 2;
    case Unit::ms: return 3;
  }
  return 3;
}

/// Rounds to the emitted precision so that parse(emit(s)) == s.
inline double quantize(Unit u, double v) {
  double q = 0.0;
  parse_double(format_fixed(v, unit_decimals(u)), q);
  return q;
}

struct SeriesPoint {
  TimeWindow window;
  std::optional<double> value;  // absent when undefined (e.g. no routed pairs)
  std::optional<std::size_t> routed_pairs;

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct MetricSeries {
  std::string name;
  Unit unit = Unit::count;
  std::map<std::string, std::string> metadata;
  std::vector<SeriesPoint> points;

  bool has_routed() const {
    return std::any_of(points.begin(), points.end(), [](const SeriesPoint& p) { return p.routed_pairs.has_value(); });
  }

  friend bool operator==(const MetricSeries&, const MetricSeries&) = default;
};

inline std::vector<TimeWindow> windows_of(std::span<const SnapshotGraph> graphs) {
  std::vector<TimeWindow> w;
  w.reserve(graphs.size());
  for (const auto& g : graphs) w.push_back(g.window());
  return w;
}

inline MetricSeries critical_count_series(const SatbMatrix& m, std::span<const TimeWindow> windows) {
  if (windows.size() != m.windows()) throw ArgumentError("critical_count_series: window count mismatch");
  MetricSeries s{"critical_count", Unit::count, {}, {}};
  for (std::size_t x = 0; x < m.windows(); ++x)
    s.points.push_back({windows[x], static_cast<double>(critical_set(m, x).size()), std::nullopt});
  return s;
}

/// Mean delay over routed pairs only; absent when a window routes nothing.
inline MetricSeries mean_delay_series(const RoutingTable& paths, std::span<const TimeWindow> windows,
                                      std::string name = "mean_delay") {
  if (windows.size() != paths.size()) throw ArgumentError("mean_delay_series: window count mismatch");
  MetricSeries s{std::move(name), Unit::ms, {}, {}};
  for (std::size_t x = 0; x < paths.size(); ++x) {
    long double total_us = 0;
    std::size_t routed = 0;
    for (const auto& p : paths[x]) {
      if (!p) continue;
      total_us += static_cast<long double>(p->delay.us());
      ++routed;
    }
    std::optional<double> v;
    if (routed > 0) v = quantize(Unit::ms, static_cast<double>(total_us / routed / 1000.0L));
    s.points.push_back({windows[x], v, routed});
  }
  return s;
}

inline MetricSeries eta_series(std::span<const std::optional<double>> eta, std::span<const TimeWindow> windows,
                               std::string name) {
  if (windows.size() != eta.size()) throw ArgumentError("eta_series: window count mismatch");
  MetricSeries s{std::move(name), Unit::percent, {}, {}};
  for (std::size_t x = 0; x < eta.size(); ++x) {
    std::optional<double> v;
    if (eta[x]) v = quantize(Unit::percent, *eta[x]);
    s.points.push_back({windows[x], v, std::nullopt});
  }
  return s;
}

inline MetricSeries connectivity_series(const RoutingTable& paths, std::span<const TimeWindow> windows,
                                        std::size_t demand_size, std::string name = "connectivity") {
  std::vector<std::optional<double>> eta;
  for (const auto& w : paths) eta.push_back(eta_of(routed_count(w), demand_size));
  auto s = eta_series(eta, windows, std::move(name));
  for (std::size_t x = 0; x < paths.size(); ++x) s.points[x].routed_pairs = routed_count(paths[x]);
  return s;
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::string value_field(const MetricSeries& s, const SeriesPoint& p) {
  return p.value ? format_fixed(*p.value, unit_decimals(s.unit)) : std::string{};
}

inline std::vector<std::string> csv_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

inline double csv_double(std::string_view f, std::size_t line, std::string_view what) {
  double v = 0.0;
  if (!parse_double(f, v)) throw ParseError(line, "bad " + std::string(what) + " '" + std::string(f) + "'");
  return v;
}

inline std::size_t csv_size(std::string_view f, std::size_t line, std::string_view what) {
  double v = csv_double(f, line, what);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw ParseError(line, "bad " + std::string(what) + " '" + std::string(f) + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// One series: window_index,t_start,t_end,value[,routed_pairs]
inline std::string series_csv(const MetricSeries& s) {
  const bool routed = s.has_routed();
  std::string out = "# series: " + s.name + "\n# unit: " + std::string(to_string(s.unit)) + "\n";
  for (const auto& [k, v] : s.metadata) out += "# " + k + ": " + v + "\n";
  out += routed ? "window_index,t_start,t_end,value,routed_pairs\n" : "window_index,t_start,t_end,value\n";
  for (const auto& p : s.points) {
    out += std::to_string(p.window.index) + ',' + format_double(p.window.t_start) + ',' +
           format_double(p.window.t_end) + ',' + detail::value_field(s, p);
    if (routed) out += ',' + (p.routed_pairs ? std::to_string(*p.routed_pairs) : std::string{});
    out += '\n';
  }
  return out;
}

inline MetricSeries parse_series_csv(std::string_view text) {
  MetricSeries s;
  bool header_seen = false;
  bool routed = false;
  const auto lines = detail::csv_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    std::string_view line = lines[i];
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = detail::trim(line.substr(1));
      auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      std::string key(detail::trim(body.substr(0, colon)));
      std::string val(detail::trim(body.substr(colon + 1)));
      if (key == "series") s.name = val;
      else if (key == "unit") s.unit = parse_unit(val);
      else s.metadata[key] = val;
      continue;
    }
    const auto f = detail::split_csv(line);
    if (!header_seen) {
      if (f.size() < 4 || f[0] != "window_index" || f[1] != "t_start" || f[2] != "t_end" || f[3] != "value")
        throw SchemaError("series CSV header must be window_index,t_start,t_end,value[,routed_pairs]");
      routed = f.size() == 5 && f[4] == "routed_pairs";
      if (f.size() > 5 || (f.size() == 5 && !routed)) throw SchemaError("unexpected series CSV columns");
      header_seen = true;
      continue;
    }
    if (f.size() != (routed ? 5u : 4u)) throw ParseError(ln, "wrong number of fields");
    SeriesPoint p;
    p.window.index = detail::csv_size(f[0], ln, "window_index");
    p.window.t_start = detail::csv_double(f[1], ln, "t_start");
    p.window.t_end = detail::csv_double(f[2], ln, "t_end");
    if (!f[3].empty()) p.value = detail::csv_double(f[3], ln, "value");
    if (routed && !f[4].empty()) p.routed_pairs = detail::csv_size(f[4], ln, "routed_pairs");
    s.points.push_back(p);
  }
  if (!header_seen) throw SchemaError("series CSV has no header");
  return s;
}

/// A set of series in long form:
/// series,window_index,t_start,t_end,value,routed_pairs
inline std::string series_set_csv(const std::vector<MetricSeries>& set) {
  std::string out = "series,unit,window_index,t_start,t_end,value,routed_pairs\n";
  for (const auto& s : set)
    for (const auto& p : s.points)
      out += s.name + ',' + std::string(to_string(s.unit)) + ',' + std::to_string(p.window.index) + ',' +
             format_double(p.window.t_start) + ',' + format_double(p.window.t_end) + ',' + detail::value_field(s, p) +
             ',' + (p.routed_pairs ? std::to_string(*p.routed_pairs) : std::string{}) + '\n';
  return out;
}

/// Metadata does not survive the long CSV form; use JSON to keep it.
inline std::vector<MetricSeries> parse_series_set_csv(std::string_view text) {
  std::vector<MetricSeries> set;
  const auto lines = detail::csv_lines(text);
  if (lines.empty() || lines[0] != "series,unit,window_index,t_start,t_end,value,routed_pairs")
    throw SchemaError("series set CSV header must be series,unit,window_index,t_start,t_end,value,routed_pairs");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    if (lines[i].empty()) continue;
    const auto f = detail::split_csv(lines[i]);
    if (f.size() != 7) throw ParseError(ln, "wrong number of fields");
    if (set.empty() || set.back().name != f[0]) set.push_back({std::string(f[0]), parse_unit(f[1]), {}, {}});
    SeriesPoint p;
    p.window.index = detail::csv_size(f[2], ln, "window_index");
    p.window.t_start = detail::csv_double(f[3], ln, "t_start");
    p.window.t_end = detail::csv_double(f[4], ln, "t_end");
    if (!f[5].empty()) p.value = detail::csv_double(f[5], ln, "value");
    if (!f[6].empty()) p.routed_pairs = detail::csv_size(f[6], ln, "routed_pairs");
    set.back().points.push_back(p);
  }
  return set;
}

inline nlohmann::ordered_json series_to_json(const MetricSeries& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["unit"] = to_string(s.unit);
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.metadata) j["metadata"][k] = v;
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : s.points) {
    nlohmann::ordered_json q;
    q["window_index"] = p.window.index;
    q["t_start"] = p.window.t_start;
    q["t_end"] = p.window.t_end;
    q["value"] = p.value ? nlohmann::ordered_json(*p.value) : nlohmann::ordered_json(nullptr);
    if (p.routed_pairs) q["routed_pairs"] = *p.routed_pairs;
    pts.push_back(std::move(q));
  }
  j["points"] = std::move(pts);
  return j;
}

inline std::string series_set_json(const std::vector<MetricSeries>& set) {
  nlohmann::ordered_json j;
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : set) j["series"].push_back(series_to_json(s));
  return j.dump(2) + "\n";
}

inline std::vector<MetricSeries> parse_series_set_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, e.what());
  }
  std::vector<MetricSeries> set;
  try {
    for (const auto& sj : j.at("series")) {
      MetricSeries s;
      s.name = sj.at("name").get<std::string>();
      s.unit = parse_unit(sj.at("unit").get<std::string>());
      const auto meta = sj.value("metadata", nlohmann::json::object());
      for (const auto& [k, v] : meta.items()) s.metadata[k] = v.get<std::string>();
      for (const auto& q : sj.at("points")) {
        SeriesPoint p;
        p.window.index = q.at("window_index").get<std::size_t>();
        p.window.t_start = q.at("t_start").get<double>();
        p.window.t_end = q.at("t_end").get<double>();
        if (!q.at("value").is_null()) p.value = q.at("value").get<double>();
        if (q.contains("routed_pairs")) p.routed_pairs = q.at("routed_pairs").get<std::size_t>();
        s.points.push_back(p);
      }
      set.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("series JSON: ") + e.what());
  }
  return set;
}

enum class ReportFormat { csv, json };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("format", "must be csv or json");
}

inline std::string emit(const std::vector<MetricSeries>& set, ReportFormat fmt) {
  return fmt == ReportFormat::csv ? series_set_csv(set) : series_set_json(set);
}

// ---------------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

inline void emit(const std::vector<MetricSeries>& set, ReportFormat fmt, const std::filesystem::path& destination) {
  write_text_file(destination, emit(set, fmt));
}

}  // namespace conres
