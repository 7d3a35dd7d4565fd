// conres: contact-plan generation, SATB analysis and failure evaluation.
//
// Exit codes: 0 success, 1 usage/config error, 2 data/validation error,
// 3 I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "conres/conres.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kIo = 3 };

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<double> threshold_s;
  std::optional<std::string> delay_mode;
};

void add_scenario_options(CLI::App* cmd, CommonOptions& o, bool analysis) {
  cmd->add_option("--config", o.config, "Scenario or constellation config (JSON)")->required();
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--seed", o.seed, "Seed for every random choice");
  cmd->add_option("--delay-mode", o.delay_mode, "physical|uniform");
  if (analysis) {
    cmd->add_option("--jobs", o.jobs, "Worker threads (outputs do not depend on it)");
    cmd->add_option("--threshold-s", o.threshold_s, "Window merge threshold in seconds");
  }
}

conres::ScenarioConfig load(const CommonOptions& o) {
  auto s = conres::load_scenario(o.config);
  conres::ScenarioOverrides ov;
  ov.seed = o.seed;
  ov.jobs = o.jobs;
  ov.threshold_s = o.threshold_s;
  if (o.delay_mode) ov.delay_mode = conres::parse_delay_mode(*o.delay_mode);
  conres::apply_overrides(s, ov);
  return s;
}

std::vector<conres::EventDescriptor> load_events(const std::string& path, std::uint64_t seed) {
  auto events = conres::event_descriptors_from_json(conres::parse_json_text(conres::read_text_file(path), path));
  for (auto& e : events)
    if (!e.geo_seed_given) e.geo.seed = seed;
  return events;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conres: service-aware critical satellite analysis of LEO contact plans"};
  app.require_subcommand(1);

  CommonOptions gen_opt;
  std::string gen_format = "csv";
  auto* gen = app.add_subcommand("generate", "Propagate a Walker constellation and write its contact plan");
  add_scenario_options(gen, gen_opt, false);
  gen->add_option("--format", gen_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

  CommonOptions an_opt;
  auto* analyze = app.add_subcommand("analyze", "Baseline windows, SATB matrix, ranking and series");
  add_scenario_options(analyze, an_opt, true);

  CommonOptions fail_opt;
  std::string events_path;
  auto* fail = app.add_subcommand("fail", "Evaluate failure events against the baseline");
  add_scenario_options(fail, fail_opt, true);
  fail->add_option("--events", events_path, "Failure event file (JSON); replaces the scenario's events");

  std::string report_in;
  std::string report_out;
  std::string report_format = "csv";
  auto* report = app.add_subcommand("report", "Combine the series of a run directory into one file");
  report->add_option("--in", report_in, "Run directory")->required();
  report->add_option("--out", report_out, "Output file (default: stdout)");
  report->add_option("--format", report_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      auto s = load(gen_opt);
      if (!s.constellation) throw conres::ConfigError("constellation", "generate needs a constellation config");
      conres::run_generate(*s.constellation, gen_opt.out,
                           gen_format == "json" ? conres::PlanFormat::json : conres::PlanFormat::csv);
    } else if (*analyze) {
      conres::run_analyze(load(an_opt), an_opt.out);
    } else if (*fail) {
      auto s = load(fail_opt);
      if (!events_path.empty()) s.events = load_events(events_path, s.seed);
      conres::run_fail(s, fail_opt.out);
    } else if (*report) {
      const std::string text = conres::run_report(report_in, conres::parse_report_format(report_format));
      if (report_out.empty()) std::cout << text;
      else conres::write_text_file(report_out, text);
    }
  } catch (const conres::ConfigError& e) {
    conres::log::error(e.what());
    return kUsage;
  } catch (const conres::ArgumentError& e) {
    conres::log::error(e.what());
    return kUsage;
  } catch (const conres::IoError& e) {
    conres::log::error(e.what());
    return kIo;
  } catch (const conres::Error& e) {
    conres::log::error(e.what());
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    conres::log::error(e.what());
    return kIo;
  } catch (const std::exception& e) {
    conres::log::error(std::string("internal error: ") + e.what());
    return kData;
  }
  return kOk;
}
