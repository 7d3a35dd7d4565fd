#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "support.hpp"

using namespace conres;
using namespace conres::testing;
namespace fs = std::filesystem;

namespace {

std::string cli_path;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

// 1: the hand-computed fixture reproduces exactly.
Outcome worked_example() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto plan = worked_example_plan();
  auto g = build_temporal_graphs(plan, 60);
  auto d = worked_example_demand(plan);
  auto a = rank_critical(g, d);
  auto id = [&](const char* s) { return plan.index_of(s); };
  const std::vector<std::vector<SatbValue>> want{{2, 2, 0, 0}, {0, 1, 2, 1}, {0, 2, 0, 2}};
  o.require(g.size() == 3, "expected 3 windows");
  for (std::size_t x = 0; x < std::min<std::size_t>(3, g.size()); ++x)
    o.require(std::vector<SatbValue>(a.matrix.row(x).begin(), a.matrix.row(x).end()) == want[x],
              "SATB row " + std::to_string(x) + " differs");
  o.require(a.ranking[0] == std::vector<NodeIndex>{id("S1"), id("S2"), id("S3"), id("S4")}, "window 0 ranking");
  o.require(a.ranking[1] == std::vector<NodeIndex>{id("S3"), id("S2"), id("S4"), id("S1")}, "window 1 ranking");
  o.require(a.ranking[2] == std::vector<NodeIndex>{id("S2"), id("S4"), id("S1"), id("S3")}, "window 2 ranking");
  auto r = evaluate_failure(g, d, a, explicit_failure(0, {id("S1")}));
  o.require(r.eta_no_reroute[0] && std::abs(*r.eta_no_reroute[0] - 100.0 / 3.0) < 1e-9, "eta after S1 failure");
  o.require(r.matrix.value(0, id("S2")) == 1, "S2 after S1 failure");
  const double s = seconds_since(t0);
  o.require(s < 1.0, "took " + fmt(s) + " s");
  if (o.pass) o.detail = "M, P and S1 failure match, " + fmt(s, 3) + " s";
  return o;
}

// 2: SATB invariants on random instances against brute force.
Outcome satb_properties() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  // exhaustive enumeration needs small graphs
  RandomParams rp;
  rp.max_sats = 10;
  rp.max_cells = 5;
  const int n = 220;
  for (int i = 0; i < n && o.pass; ++i) {
    auto inst = random_instance(rng, rp);
    auto a = rank_critical(inst.graphs, inst.demand);
    auto oracle = brute_force_satb(inst.graphs, inst.demand);
    std::vector<char> on_some_path;
    for (std::size_t x = 0; x < inst.graphs.size(); ++x) {
      on_some_path.assign(inst.plan.nodes.size(), 0);
      for (const auto& pr : inst.demand.pairs())
        for (const auto& p : enumerate_paths(inst.graphs[x], pr.src, pr.dst))
          for (std::size_t k = 1; k + 1 < p.hops.size(); ++k) on_some_path[p.hops[k]] = 1;
      for (NodeIndex s : inst.plan.satellites()) {
        const auto v = a.matrix.value(x, s);
        o.require(v == oracle[x][s], "instance " + std::to_string(i) + ": SATB differs from brute force");
        o.require(v <= inst.demand.size(), "instance " + std::to_string(i) + ": SATB exceeds pair count");
        o.require(on_some_path[s] || v == 0, "instance " + std::to_string(i) + ": unreachable satellite nonzero");
      }
    }
  }
  const double s = seconds_since(t0);
  o.require(s < 30.0, "took " + fmt(s) + " s");
  if (o.pass) o.detail = std::to_string(n) + " instances, " + fmt(s) + " s";
  return o;
}

// 3: one satellite at a time equals the batch matrix column.
Outcome batch_equals_single() {
  Outcome o;
  std::mt19937_64 rng(303);
  int checked = 0;
  for (int i = 0; i < 60 && o.pass; ++i) {
    auto inst = random_instance(rng);
    auto batch = satb_all(inst.graphs, inst.demand, 2);
    for (NodeIndex s : inst.plan.satellites()) {
      o.require(satb_single(inst.graphs, inst.demand, s) == batch.matrix.column_values(s),
                "instance " + std::to_string(i) + " satellite " + inst.plan.nodes[s].id);
      ++checked;
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " satellite vectors";
  return o;
}

// 4: incremental failure evaluation equals recomputation from scratch.
Outcome incremental_equals_scratch() {
  Outcome o;
  std::mt19937_64 rng(404);
  int single = 0, multi = 0;
  for (int i = 0; i < 140 && o.pass; ++i) {
    auto inst = random_instance(rng);
    auto base = rank_critical(inst.graphs, inst.demand);
    auto failed = random_failure_set(rng, inst.plan, i % 2 == 0 ? 1 : 5);
    const double t_f = std::uniform_real_distribution<double>(inst.plan.t0, inst.plan.t1)(rng);
    auto r = evaluate_failure(inst.graphs, inst.demand, base, explicit_failure(t_f, failed));
    auto s = scratch_failure(inst.graphs, inst.demand, failed, t_f);
    const std::string tag = "case " + std::to_string(i);
    o.require(r.paths == s.paths, tag + ": paths");
    o.require(r.matrix == s.matrix, tag + ": SATB matrix");
    o.require(r.eta_with_reroute == s.eta_with, tag + ": eta with rerouting");
    o.require(r.eta_no_reroute == s.eta_without, tag + ": eta without rerouting");
    (failed.size() == 1 ? single : multi)++;
  }
  if (o.pass) o.detail = std::to_string(single) + " single and " + std::to_string(multi) + " multi-node failures";
  o.require(single + multi >= 100, "too few cases");
  return o;
}

// 5: routing agrees with exhaustive enumeration on small snapshots.
Outcome shortest_paths() {
  Outcome o;
  std::mt19937_64 rng(505);
  RandomParams rp;
  rp.max_sats = 8;
  rp.max_cells = 4;
  rp.link_prob = 0.4;
  int pairs = 0;
  for (int i = 0; i < 150 && o.pass; ++i) {
    auto inst = random_instance(rng, rp);
    for (const auto& g : inst.graphs) {
      if (g.node_count() > 12) continue;
      for (NodeIndex a : inst.plan.cells())
        for (NodeIndex b : inst.plan.cells()) {
          if (a == b) continue;
          auto got = shortest_path(g, a, b);
          auto want = brute_force_shortest(g, a, b);
          o.require(got.has_value() == want.has_value(), "reachability differs");
          if (got && want) {
            o.require(got->delay == want->delay, "delay differs");
            o.require(got->hops == want->hops, "hop sequence differs");
          }
          ++pairs;
        }
    }
  }
  if (o.pass) o.detail = std::to_string(pairs) + " ordered pairs";
  return o;
}

struct Desk {
  ConstellationConfig cfg;
  std::vector<Satellite> sats;
  ContactPlan plan;
  std::vector<SnapshotGraph> graphs;
  ServiceDemand demand;
  CriticalAnalysis baseline;
};

Desk& desk() {
  static Desk d = [] {
    Desk r;
    r.cfg = desk_config();
    r.plan = generate_plan(r.cfg, &r.sats);
    r.graphs = build_temporal_graphs(r.plan, 60);
    r.demand = ServiceDemand::full_mesh(r.plan.cells());
    r.baseline = rank_critical(r.graphs, r.demand);
    return r;
  }();
  return d;
}

// 6: top-k failures at t=0 drop service, which recovers as the constellation moves.
Outcome desk_recovery() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto& d = desk();
  const std::size_t W = d.graphs.size();
  const std::size_t q = std::max<std::size_t>(1, W / 4);
  bool dropped = false;
  std::string drops;
  for (std::size_t k = 1; k <= 8; ++k) {
    auto r = evaluate_failure(d.graphs, d.demand, d.baseline, top_k_failure(0, k, d.graphs, d.baseline.ranking));
    const auto& eta = r.eta_no_reroute;
    const double at_tau = eta[r.failure_window].value_or(100.0);
    dropped = dropped || at_tau < 100.0;
    drops += (k > 1 ? "/" : "") + fmt(at_tau, 1);
    double first = 100.0, last = 100.0;
    for (std::size_t x = 0; x < q; ++x) first = std::min(first, eta[x].value_or(100.0));
    for (std::size_t x = W - q; x < W; ++x) last = std::min(last, eta[x].value_or(100.0));
    o.require(last >= first, "k=" + std::to_string(k) + ": final quartile min " + fmt(last) + " below first " + fmt(first));
    if (at_tau < 100.0) {
      bool back = false;
      for (std::size_t x = r.failure_window + 1; x < W; ++x) back = back || eta[x].value_or(0.0) == 100.0;
      o.require(back, "k=" + std::to_string(k) + ": never returns to 100%");
    }
  }
  o.require(dropped, "no k in 1..8 reduced eta at the failure window");
  const double s = seconds_since(t0);
  o.require(s < 120.0, "took " + fmt(s) + " s");
  if (o.pass) o.detail = std::to_string(W) + " windows, eta at failure " + drops + ", " + fmt(s) + " s";
  return o;
}

// 7: rerouting restores service wherever the residual graph still connects
// every pair, and never shortens an affected path.
Outcome rerouting_restores() {
  Outcome o;
  int windows = 0, restored = 0;
  auto check = [&](const std::vector<SnapshotGraph>& graphs, const ServiceDemand& demand, const FailureEvent& e,
                   const std::string& tag) {
    auto r = evaluate_with_rerouting(graphs, demand, e);
    for (std::size_t x = r.failure_window; x < graphs.size(); ++x) {
      auto residual = remove_nodes(graphs[x], e.failed);
      const bool connected = demand.size() > 0 && routed_count(all_service_paths(residual, demand)) == demand.size();
      ++windows;
      if (connected) {
        ++restored;
        o.require(r.eta_with_reroute[x] == 100.0, tag + " window " + std::to_string(x) + ": not restored");
      }
    }
    for (const auto& [key, c] : r.affected_paths) o.require(c.post >= c.pre, tag + ": rerouted path shorter than original");
  };
  auto& d = desk();
  for (std::size_t k = 1; k <= 8; ++k)
    check(d.graphs, d.demand, top_k_failure(0, k, d.graphs, d.baseline.ranking), "desk k=" + std::to_string(k));
  std::mt19937_64 rng(707);
  for (int i = 0; i < 80; ++i) {
    auto inst = random_instance(rng);
    const double t_f = std::uniform_real_distribution<double>(inst.plan.t0, inst.plan.t1)(rng);
    check(inst.graphs, inst.demand, explicit_failure(t_f, random_failure_set(rng, inst.plan, 3)),
          "random " + std::to_string(i));
  }
  if (o.pass) o.detail = std::to_string(restored) + " of " + std::to_string(windows) + " post-failure windows fully connected and restored";
  return o;
}

// 8: failing a superset never improves eta.
Outcome nested_failures() {
  Outcome o;
  std::mt19937_64 rng(808);
  int cases = 0;
  for (int i = 0; i < 80 && o.pass; ++i) {
    auto inst = random_instance(rng);
    auto base = rank_critical(inst.graphs, inst.demand);
    auto B = random_failure_set(rng, inst.plan, 6);
    if (B.size() < 2) continue;
    auto A = B;
    A.resize(std::uniform_int_distribution<std::size_t>(1, B.size() - 1)(rng));
    const double t_f = std::uniform_real_distribution<double>(inst.plan.t0, inst.plan.t1)(rng);
    auto ra = evaluate_failure(inst.graphs, inst.demand, base, explicit_failure(t_f, A));
    auto rb = evaluate_failure(inst.graphs, inst.demand, base, explicit_failure(t_f, B));
    for (std::size_t x = 0; x < inst.graphs.size(); ++x) {
      if (!ra.eta_no_reroute[x]) continue;
      o.require(*rb.eta_no_reroute[x] <= *ra.eta_no_reroute[x], "case " + std::to_string(i) + ": eta without rerouting grew");
      o.require(*rb.eta_with_reroute[x] <= *ra.eta_with_reroute[x], "case " + std::to_string(i) + ": eta with rerouting grew");
    }
    ++cases;
  }
  o.require(cases >= 50, "only " + std::to_string(cases) + " nested cases");
  if (o.pass) o.detail = std::to_string(cases) + " nested failure sets";
  return o;
}

// 9: geo cluster selection matches a direct distance check.
Outcome geo_brute_force() {
  Outcome o;
  auto& d = desk();
  int seeds = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const double t_f = 277.0 * static_cast<double>(seed);
    auto e = geo_cluster_failure(d.plan, d.sats, d.cfg.cells, t_f, GeoClusterSpec{{}, 1, 2000.0, 1100.0, seed});
    if (e.regions.size() != 1) {
      o.require(false, "seed " + std::to_string(seed) + ": expected one region");
      break;
    }
    const auto& c = *std::find_if(d.cfg.cells.begin(), d.cfg.cells.end(),
                                  [&](const GroundCell& g) { return g.id == e.regions[0].center_cell; });
    const Vec3 center = oracle_cell_position(c.latitude_deg, c.longitude_deg, t_f, 6371.0 + 1100.0);
    std::vector<NodeIndex> want;
    for (const auto& s : d.sats)
      if (distance(oracle_satellite_position(s.elements, t_f), center) <= 2000.0) want.push_back(d.plan.index_of(s.id));
    std::sort(want.begin(), want.end());
    o.require(e.failed == want, "seed " + std::to_string(seed) + ": failed set differs");
    total += want.size();
    ++seeds;
  }
  if (o.pass) o.detail = std::to_string(seeds) + " seeds, " + std::to_string(total) + " satellites selected in total";
  return o;
}

int run(const std::string& args) {
  const std::string cmd = cli_path + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 10: same seed, same bytes.
Outcome reproducible_manifest() {
  Outcome o;
  if (cli_path.empty()) {
    o.require(false, "no CLI path given");
    return o;
  }
  const auto dir = fs::temp_directory_path() / "conres_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "scenario.json", R"({
  "constellation": {
    "layers": [{"planes": 8, "sats_per_plane": 12, "altitude_km": 1150, "inclination_deg": 53, "phasing_offset_deg": 9}],
    "horizon_s": 1200, "los_threshold_km": 3500,
    "cells": [{"id": "NYC", "lat": 40.7, "lon": -74.0}, {"id": "LON", "lat": 51.5, "lon": -0.1},
              {"id": "SAO", "lat": -23.5, "lon": -46.6}]
  },
  "seed": 11, "delay_mode": "uniform",
  "events": [{"t_f": 0, "kind": "top_k", "top_k": 3},
             {"t_f": 300, "kind": "geo", "geo": {"count": 2, "radius_km": 2000, "altitude_km": 1100}}]
})");
  const std::string cfg = (dir / "scenario.json").string();
  for (const char* run_name : {"a", "b"}) {
    const int rc = run("fail --config " + cfg + " --out " + (dir / run_name).string() + " --seed 11");
    o.require(rc == 0, std::string("run ") + run_name + " exited with " + std::to_string(rc));
  }
  if (!o.pass) return o;
  const auto a = read_text_file(dir / "a" / "manifest.json");
  const auto b = read_text_file(dir / "b" / "manifest.json");
  o.require(a == b, "manifests differ");
  if (o.pass) o.detail = "manifest sha256 " + sha256_hex(a).substr(0, 16);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) cli_path = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"worked example", worked_example},
      {"SATB properties on random instances", satb_properties},
      {"batch equals per-satellite", batch_equals_single},
      {"incremental equals scratch", incremental_equals_scratch},
      {"shortest paths vs enumeration", shortest_paths},
      {"desk constellation recovery", desk_recovery},
      {"rerouting restoration", rerouting_restores},
      {"nested failure monotonicity", nested_failures},
      {"geo cluster vs brute force", geo_brute_force},
      {"reproducible manifest", reproducible_manifest},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
