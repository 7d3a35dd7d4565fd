#pragma once

// Walker constellation synthesis, circular two-body propagation on a
// spherical Earth, and contact-plan generation by distance thresholding.
//
// Frame: all positions are in an inertial frame that coincides with the
// Earth-fixed frame at the epoch (t = 0). Satellites move on fixed circles
// in that frame; ground cells rotate with the Earth about +z.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "conres/contact_plan.hpp"
#include "conres/types.hpp"

namespace conres {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kMuEarth = 398600.4418;          // km^3 / s^2
inline constexpr double kSiderealDayS = 86164.0905;
inline constexpr double kSpeedOfLightKmPerMs = 299.792458;  // km per ms

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

inline double normalize_deg(double d) {
  double r = std::fmod(d, 360.0);
  if (r < 0.0) r += 360.0;
  return r == 360.0 ? 0.0 : r;
}

struct OrbitalElements {
  double altitude_km = 0.0;
  double inclination_deg = 0.0;
  double raan_deg = 0.0;
  double phase_deg = 0.0;  // argument of latitude at epoch
  double epoch_s = 0.0;
};

struct Satellite {
  std::string id;
  OrbitalElements elements;
};

struct GroundCell {
  std::string id;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
};

struct ShellConfig {
  int planes = 1;
  int sats_per_plane = 1;
  double altitude_km = 1150.0;
  double inclination_deg = 53.0;
  double phasing_offset_deg = 0.0;  // along-track offset between adjacent planes
};

enum class DelayMode { physical, uniform };

inline DelayMode parse_delay_mode(std::string_view s) {
  if (s == "physical") return DelayMode::physical;
  if (s == "uniform") return DelayMode::uniform;
  throw ConfigError("delay_mode", "unknown mode '" + std::string(s) + "' (expected physical|uniform)");
}

inline std::string_view to_string(DelayMode m) { return m == DelayMode::physical ? "physical" : "uniform"; }

struct ConstellationConfig {
  std::vector<ShellConfig> layers;
  std::string epoch = "2024-10-09T04:00:00Z";
  double horizon_s = 7200.0;
  double sample_step_s = 10.0;
  double los_threshold_km = 2500.0;
  std::vector<GroundCell> cells;
  DelayMode delay_mode = DelayMode::uniform;
  std::uint64_t seed = 1;
};

/// Throws ConfigError naming the first offending field.
inline void validate_config(const ConstellationConfig& cfg) {
  if (cfg.layers.empty()) throw ConfigError("layers", "at least one layer is required");
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const auto& l = cfg.layers[i];
    const std::string p = "layers[" + std::to_string(i) + "].";
    if (l.planes < 1) throw ConfigError(p + "planes", "must be >= 1");
    if (l.sats_per_plane < 1) throw ConfigError(p + "sats_per_plane", "must be >= 1");
    if (!(l.altitude_km > 0.0)) throw ConfigError(p + "altitude_km", "must be > 0");
    if (!(l.inclination_deg >= 0.0 && l.inclination_deg <= 180.0))
      throw ConfigError(p + "inclination_deg", "must lie in [0, 180]");
    if (!std::isfinite(l.phasing_offset_deg)) throw ConfigError(p + "phasing_offset_deg", "must be finite");
  }
  if (!(cfg.horizon_s > 0.0)) throw ConfigError("horizon_s", "must be > 0");
  if (!(cfg.sample_step_s > 0.0)) throw ConfigError("sample_step_s", "must be > 0");
  if (!(cfg.los_threshold_km >= 0.0)) throw ConfigError("los_threshold_km", "must be >= 0");
  for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
    if (!(std::abs(cfg.cells[i].latitude_deg) <= 90.0))
      throw ConfigError("cells[" + std::to_string(i) + "].lat", "must lie in [-90, 90]");
    if (cfg.cells[i].id.empty()) throw ConfigError("cells[" + std::to_string(i) + "].id", "must be non-empty");
  }
}

/// Circular-orbit period 2*pi*sqrt(a^3/mu), seconds.
inline double orbital_period_s(double altitude_km) {
  const double a = kEarthRadiusKm + altitude_km;
  return 2.0 * std::numbers::pi * std::sqrt(a * a * a / kMuEarth);
}

inline std::string satellite_id(std::size_t index, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(total == 0 ? 0 : total - 1).size());
  std::string digits = std::to_string(index);
  return "S" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

/// Walker-delta layout: planes evenly spaced in RAAN over 360 deg, slots
/// evenly spaced in phase; ids ordered (layer, plane, slot).
inline std::vector<Satellite> generate_walker(const ConstellationConfig& cfg) {
  validate_config(cfg);
  std::size_t total = 0;
  for (const auto& l : cfg.layers) total += static_cast<std::size_t>(l.planes) * l.sats_per_plane;
  std::vector<Satellite> out;
  out.reserve(total);
  for (const auto& l : cfg.layers) {
    for (int p = 0; p < l.planes; ++p) {
      for (int s = 0; s < l.sats_per_plane; ++s) {
        OrbitalElements e;
        e.altitude_km = l.altitude_km;
        e.inclination_deg = l.inclination_deg;
        e.raan_deg = normalize_deg(360.0 * p / l.planes);
        e.phase_deg = normalize_deg(360.0 * s / l.sats_per_plane + p * l.phasing_offset_deg);
        out.push_back({satellite_id(out.size(), total), e});
      }
    }
  }
  return out;
}

/// Position (km) at t seconds after the plan epoch; requires t >= epoch_s.
inline Vec3 satellite_position(const OrbitalElements& e, double t) {
  const double r = kEarthRadiusKm + e.altitude_km;
  const double n = 2.0 * std::numbers::pi / orbital_period_s(e.altitude_km);
  const double u = deg2rad(e.phase_deg) + n * (t - e.epoch_s);
  const double raan = deg2rad(e.raan_deg);
  const double inc = deg2rad(e.inclination_deg);
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(raan), so = std::sin(raan);
  const double ci = std::cos(inc), si = std::sin(inc);
  return {r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * (su * si)};
}

inline Vec3 ground_cell_position(const GroundCell& c, double t) {
  const double lat = deg2rad(c.latitude_deg);
  const double lon = deg2rad(c.longitude_deg) + 2.0 * std::numbers::pi * t / kSiderealDayS;
  return {kEarthRadiusKm * std::cos(lat) * std::cos(lon), kEarthRadiusKm * std::cos(lat) * std::sin(lon),
          kEarthRadiusKm * std::sin(lat)};
}

/// Satellite strictly above the cell's local horizon.
inline bool above_horizon(const Vec3& cell, const Vec3& sat) { return (sat - cell).dot(cell) > 0.0; }

// ---------------------------------------------------------------------------
// Link delays

namespace detail {
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace detail

/// Stable identity of an undirected contact, used to key uniform delays.
inline std::uint64_t contact_key(std::string_view a, std::string_view b, double t_start) {
  if (b < a) std::swap(a, b);
  std::uint64_t h = detail::fnv1a(a);
  h = detail::fnv1a("|", h);
  h = detail::fnv1a(b, h);
  h = detail::fnv1a("|" + format_double(t_start), h);
  return h;
}

/// `physical`: distance / c. `uniform`: U[5, 15] ms at microsecond
/// resolution, a pure function of (seed, key).
inline Delay link_delay(double distance_km, DelayMode mode, std::uint64_t seed, std::uint64_t key) {
  if (distance_km < 0.0) throw ArgumentError("link_delay: negative distance");
  if (mode == DelayMode::physical) return Delay::from_ms(distance_km / kSpeedOfLightKmPerMs);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<Delay::rep> dist(5000, 15000);
  return Delay::from_us(dist(rng));
}

// ---------------------------------------------------------------------------
// Contact generation

/// Sample instants 0, step, 2*step, ... plus the horizon itself when the
/// last full step falls short of it.
inline std::vector<double> sample_times(double horizon_s, double step_s) {
  std::vector<double> ts;
  const auto full = static_cast<std::size_t>(std::floor(horizon_s / step_s + 1e-9));
  for (std::size_t k = 0; k <= full; ++k) ts.push_back(std::min(horizon_s, static_cast<double>(k) * step_s));
  if (ts.back() < horizon_s) ts.push_back(horizon_s);
  return ts;
}

/// Builds a symmetric, canonical contact plan. ISLs between every
/// satellite pair and SGLs between every satellite/cell pair are the
/// maximal runs of consecutive samples with distance <= threshold (SGLs
/// also need elevation > 0); run endpoints are snapped to sample times.
/// Single-sample runs are dropped (a contact needs t_start < t_end).
inline ContactPlan compute_contacts(const std::vector<Satellite>& sats, const ConstellationConfig& cfg) {
  validate_config(cfg);
  ContactPlan plan;
  plan.epoch = cfg.epoch;
  plan.t0 = 0.0;
  plan.t1 = cfg.horizon_s;
  for (const auto& c : cfg.cells) plan.nodes.push_back({c.id, NodeKind::cell, c.latitude_deg, c.longitude_deg});
  for (const auto& s : sats) plan.nodes.push_back({s.id, NodeKind::satellite, std::nullopt, std::nullopt});
  canonicalize(plan);
  if (plan.nodes.size() != cfg.cells.size() + sats.size()) throw ConfigError("cells", "node ids must be unique");
  if (sats.empty()) return plan;

  const auto ts = sample_times(cfg.horizon_s, cfg.sample_step_s);
  const std::size_t K = ts.size(), S = sats.size(), C = cfg.cells.size();
  std::vector<Vec3> sp(K * S), cp(K * C);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < S; ++i) sp[k * S + i] = satellite_position(sats[i].elements, ts[k]);
    for (std::size_t j = 0; j < C; ++j) cp[k * C + j] = ground_cell_position(cfg.cells[j], ts[k]);
  }
  std::vector<NodeIndex> sat_idx(S), cell_idx(C);
  for (std::size_t i = 0; i < S; ++i) sat_idx[i] = plan.index_of(sats[i].id);
  for (std::size_t j = 0; j < C; ++j) cell_idx[j] = plan.index_of(cfg.cells[j].id);

  // Bound on how fast any pair distance can change, for exact sample skipping.
  double vmax_sat = 0.0;
  for (const auto& s : sats) {
    const double r = kEarthRadiusKm + s.elements.altitude_km;
    vmax_sat = std::max(vmax_sat, 2.0 * std::numbers::pi * r / orbital_period_s(s.elements.altitude_km));
  }
  const double v_ground = 2.0 * std::numbers::pi * kEarthRadiusKm / kSiderealDayS;
  const double thr = cfg.los_threshold_km;
  const double step = cfg.sample_step_s;

  auto emit_runs = [&](NodeIndex a, NodeIndex b, double vmax, auto&& pos_a, auto&& pos_b, auto&& extra_ok) {
    std::size_t run_start = K;
    auto close = [&](std::size_t last) {
      if (run_start < last) {
        const double t_s = ts[run_start], t_e = ts[last];
        const double mid = 0.5 * (t_s + t_e);
        double dist_mid = 0.0;
        if (cfg.delay_mode == DelayMode::physical) dist_mid = distance(pos_a(mid), pos_b(mid));
        const Delay d = link_delay(dist_mid, cfg.delay_mode, cfg.seed, contact_key(plan.id(a), plan.id(b), t_s));
        plan.contacts.push_back({t_s, t_e, a, b, d});
        plan.contacts.push_back({t_s, t_e, b, a, d});
      }
      run_start = K;
    };
    std::size_t k = 0;
    while (k < K) {
      const double dist = distance(pos_a(k), pos_b(k));
      const bool ok = dist <= thr && extra_ok(k);
      if (ok) {
        if (run_start == K) run_start = k;
        ++k;
        continue;
      }
      if (run_start != K) close(k - 1);
      std::size_t jump = 1;
      if (dist > thr && vmax > 0.0) {
        const double x = (dist - thr) / (vmax * step);
        if (x > 1.0) jump = static_cast<std::size_t>(std::ceil(x));
      }
      k += jump;
    }
    if (run_start != K) close(K - 1);
  };

  for (std::size_t i = 0; i < S; ++i) {
    for (std::size_t j = i + 1; j < S; ++j) {
      auto pa = [&](auto k) {
        if constexpr (std::is_floating_point_v<decltype(k)>) return satellite_position(sats[i].elements, k);
        else return sp[k * S + i];
      };
      auto pb = [&](auto k) {
        if constexpr (std::is_floating_point_v<decltype(k)>) return satellite_position(sats[j].elements, k);
        else return sp[k * S + j];
      };
      emit_runs(sat_idx[i], sat_idx[j], 2.0 * vmax_sat, pa, pb, [](std::size_t) { return true; });
    }
    for (std::size_t j = 0; j < C; ++j) {
      auto pa = [&](auto k) {
        if constexpr (std::is_floating_point_v<decltype(k)>) return satellite_position(sats[i].elements, k);
        else return sp[k * S + i];
      };
      auto pb = [&](auto k) {
        if constexpr (std::is_floating_point_v<decltype(k)>) return ground_cell_position(cfg.cells[j], k);
        else return cp[k * C + j];
      };
      emit_runs(sat_idx[i], cell_idx[j], vmax_sat + v_ground, pa, pb,
                [&](std::size_t k) { return above_horizon(cp[k * C + j], sp[k * S + i]); });
    }
  }
  std::sort(plan.contacts.begin(), plan.contacts.end(), contact_less);
  return plan;
}

// ---------------------------------------------------------------------------
// Config I/O

inline ConstellationConfig constellation_config_from_json(const nlohmann::json& j) {
  ConstellationConfig cfg;
  auto num = [&](const nlohmann::json& obj, const char* key, const std::string& field, double def) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_number()) throw ConfigError(field, "must be a number");
    return obj.at(key).get<double>();
  };
  auto integer = [&](const nlohmann::json& obj, const char* key, const std::string& field, int def) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_number_integer()) throw ConfigError(field, "must be an integer");
    return obj.at(key).get<int>();
  };
  if (!j.is_object()) throw ConfigError("constellation", "must be an object");
  if (!j.contains("layers") || !j.at("layers").is_array()) throw ConfigError("layers", "missing or not a list");
  std::size_t i = 0;
  for (const auto& l : j.at("layers")) {
    const std::string p = "layers[" + std::to_string(i++) + "].";
    ShellConfig s;
    s.planes = integer(l, "planes", p + "planes", 0);
    s.sats_per_plane = integer(l, "sats_per_plane", p + "sats_per_plane", 0);
    s.altitude_km = num(l, "altitude_km", p + "altitude_km", 0.0);
    s.inclination_deg = num(l, "inclination_deg", p + "inclination_deg", 0.0);
    s.phasing_offset_deg = num(l, "phasing_offset_deg", p + "phasing_offset_deg", 0.0);
    cfg.layers.push_back(s);
  }
  if (j.contains("epoch")) cfg.epoch = j.at("epoch").get<std::string>();
  cfg.horizon_s = num(j, "horizon_s", "horizon_s", cfg.horizon_s);
  cfg.sample_step_s = num(j, "sample_step_s", "sample_step_s", cfg.sample_step_s);
  cfg.los_threshold_km = num(j, "los_threshold_km", "los_threshold_km", cfg.los_threshold_km);
  if (j.contains("delay_mode")) cfg.delay_mode = parse_delay_mode(j.at("delay_mode").get<std::string>());
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  i = 0;
  for (const auto& c : j.value("cells", nlohmann::json::array())) {
    const std::string p = "cells[" + std::to_string(i++) + "].";
    if (!c.contains("id") || !c.at("id").is_string()) throw ConfigError(p + "id", "missing or not a string");
    GroundCell g{c.at("id").get<std::string>(), num(c, "lat", p + "lat", 0.0), num(c, "lon", p + "lon", 0.0)};
    cfg.cells.push_back(std::move(g));
  }
  validate_config(cfg);
  return cfg;
}

/// Inverse lookup for geo computations on an existing plan.
inline std::vector<GroundCell> cells_from_plan(const ContactPlan& plan) {
  std::vector<GroundCell> out;
  for (const auto& n : plan.nodes)
    if (n.kind == NodeKind::cell && n.lat_deg && n.lon_deg) out.push_back({n.id, *n.lat_deg, *n.lon_deg});
  return out;
}

}  // namespace conres
