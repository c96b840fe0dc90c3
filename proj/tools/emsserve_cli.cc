// emsserve: run episodes, compare reports, profile modules and use the
// medicine post-processing tools from the command line.
//
// Exit codes: 0 success, 1 file I/O failure, 2 invalid input.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "emsserve/error.h"
#include "emsserve/episodes.h"
#include "emsserve/medkit.h"
#include "emsserve/metrics.h"
#include "emsserve/profiling.h"
#include "emsserve/runner.h"

namespace fs = std::filesystem;
using namespace emsserve;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;

Episode resolve_episode(const std::string& spec) {
  if (spec == "1" || spec == "2" || spec == "3") return builtin_episode(std::stoi(spec));
  return load_episode_file(spec);
}

LatencyProfile resolve_profile(const std::string& spec) {
  if (fs::exists(spec)) return profile_store_load(spec);
  return preset_profile(spec);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  f << text;
  if (!f) fail(ErrorKind::IoError, "cannot write " + out);
}

ExportFormat pick_format(const std::string& format, const std::string& out) {
  if (!format.empty()) return parse_export_format(format);
  if (!out.empty() && out != "-" && fs::path(out).extension() == ".csv") return ExportFormat::Csv;
  return ExportFormat::Json;
}

struct RunArgs {
  std::string episode = "1";
  std::string mode = "emsserve";
  std::string profile = "devices";
  std::string family;
  std::string device = "glass";
  std::string edge = "edge-4c";
  std::string trace;
  std::string clock = "virtual";
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::string offload = "off";
  double threshold = 0.010;
  std::string out;
  std::string format;
};

void do_run(const RunArgs& a) {
  RunConfig cfg;
  if (!a.family.empty()) cfg.family = load_family(a.family);
  cfg.profile = resolve_profile(a.profile);
  cfg.device = a.device;
  cfg.edge = a.edge;
  if (!a.trace.empty()) cfg.trace = load_trace_csv(a.trace);
  cfg.clock = parse_clock_kind(a.clock);
  cfg.wall_scale = a.scale;
  cfg.seed = a.seed;
  cfg.offload_enabled = a.offload == "on";
  cfg.cache_policy.parallel_threshold = a.threshold;
  RunReport report = run(resolve_episode(a.episode), parse_run_mode(a.mode), cfg);
  const ExportFormat fmt = pick_format(a.format, a.out);
  emit(fmt == ExportFormat::Csv ? report_to_csv_text(report) : report_to_json_text(report), a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal serving simulator with feature caching and edge offloading"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run one episode and write a report");
  run_cmd->add_option("--episode", ra.episode, "Built-in episode 1|2|3 or an episode file")->capture_default_str();
  run_cmd->add_option("--mode", ra.mode, "baseline | emsserve")
      ->check(CLI::IsMember({"baseline", "emsserve"}))->capture_default_str();
  run_cmd->add_option("--profile", ra.profile, "Profile JSON file or preset name")->capture_default_str();
  run_cmd->add_option("--family", ra.family, "Model family JSON (default: standard M1/M2/M3)");
  run_cmd->add_option("--device", ra.device, "Device to serve on")->capture_default_str();
  run_cmd->add_option("--edge", ra.edge, "Edge server")->capture_default_str();
  run_cmd->add_option("--trace", ra.trace, "Bandwidth trace CSV");
  run_cmd->add_option("--clock", ra.clock, "virtual | wall")
      ->check(CLI::IsMember({"virtual", "wall"}))->capture_default_str();
  run_cmd->add_option("--scale", ra.scale, "Wall clock time scale")->capture_default_str();
  run_cmd->add_option("--seed", ra.seed, "Payload seed")->capture_default_str();
  run_cmd->add_option("--offload", ra.offload, "on | off")
      ->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  run_cmd->add_option("--parallel-threshold", ra.threshold,
                      "Sibling cost (s) at which cache work runs concurrently")->capture_default_str();
  run_cmd->add_option("--out", ra.out, "Output file (default stdout)");
  run_cmd->add_option("--format", ra.format, "csv | json (default from --out)")
      ->check(CLI::IsMember({"csv", "json"}));

  std::string base_path, ems_path, cmp_out, cmp_format;
  auto* cmp_cmd = app.add_subcommand("compare", "Speedup of an EMSServe report over a baseline");
  cmp_cmd->add_option("--base", base_path, "Baseline report")->required();
  cmp_cmd->add_option("--ems", ems_path, "EMSServe report")->required();
  cmp_cmd->add_option("--out", cmp_out, "Write the comparison here");
  cmp_cmd->add_option("--format", cmp_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  std::string prof_device = "host", prof_out, prof_family;
  int prof_runs = 15, prof_keep = 10;
  auto* prof_cmd = app.add_subcommand("profile", "Time every module with the synthetic backend");
  prof_cmd->add_option("--device", prof_device, "Device name to record")->capture_default_str();
  prof_cmd->add_option("--family", prof_family, "Model family JSON");
  prof_cmd->add_option("--runs", prof_runs, "Total runs per module")->capture_default_str();
  prof_cmd->add_option("--keep", prof_keep, "Trailing runs averaged")->capture_default_str();
  prof_cmd->add_option("--out", prof_out, "Profile JSON (merged if it exists)");

  auto* med_cmd = app.add_subcommand("med", "Medicine post-processing");
  med_cmd->require_subcommand(1);
  std::string token, dict_path;
  double max_rel_ed = 0.34;
  auto* match_cmd = med_cmd->add_subcommand("match", "Correct a medicine name");
  match_cmd->add_option("--token", token, "Extracted text")->required();
  match_cmd->add_option("--dict", dict_path, "Dictionary JSON")->required();
  match_cmd->add_option("--max-rel-ed", max_rel_ed, "Relative edit-distance threshold")->capture_default_str();
  double quantity = 0, concentration = 0;
  auto* dose_cmd = med_cmd->add_subcommand("dose", "Volume to administer");
  dose_cmd->add_option("--quantity", quantity, "Quantity in mg")->required();
  dose_cmd->add_option("--concentration", concentration, "Concentration in mg/ml")->required();

  auto* ep_cmd = app.add_subcommand("episodes", "Episode utilities");
  ep_cmd->require_subcommand(1);
  std::uint64_t gen_seed = 0;
  std::string gen_base, gen_out;
  auto* gen_cmd = ep_cmd->add_subcommand("gen", "Shuffle an episode or draw a random one");
  gen_cmd->add_option("--seed", gen_seed, "Shuffle seed")->required();
  gen_cmd->add_option("--base", gen_base, "Episode to shuffle (1|2|3 or file); random if omitted");
  gen_cmd->add_option("--out", gen_out, "Episode file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*run_cmd) {
      do_run(ra);
    } else if (*cmp_cmd) {
      Comparison c = speedup(import_report(base_path), import_report(ems_path));
      if (!cmp_out.empty())
        export_comparison(c, pick_format(cmp_format, cmp_out), cmp_out);
      std::printf("episode %s: baseline %.6f s, emsserve %.6f s, speedup %.4fx\n",
                  c.episode_id.c_str(), c.baseline_total_s, c.emsserve_total_s, c.speedup);
    } else if (*prof_cmd) {
      ModelFamily family = prof_family.empty() ? ModelFamily::standard() : load_family(prof_family);
      LatencyProfile p = profile_family(family, prof_device, prof_runs, prof_keep);
      if (prof_out.empty()) {
        std::cout << profile_to_json_text(p);
      } else {
        LatencyProfile merged = fs::exists(prof_out) ? profile_store_load(prof_out) : LatencyProfile{};
        merged.merge(p);
        profile_store_save(merged, prof_out);
      }
    } else if (*match_cmd) {
      MedsDictionary dict = load_dictionary(dict_path);
      auto m = ed_match(token, dict, max_rel_ed);
      if (!m) {
        std::printf("no match\n");
      } else {
        std::printf("%s (distance %zu)\n", m->entry->name.c_str(), m->distance);
        for (const auto& d : disease_lookup(*m->entry, dict)) std::printf("  %s\n", d.c_str());
      }
    } else if (*dose_cmd) {
      DoseResult r = med_math(quantity, concentration);
      std::printf("%.6g ml\n", r.volume_ml);
    } else if (*gen_cmd) {
      Episode ep = gen_base.empty() ? random_episode(gen_seed)
                                    : shuffled_episode(resolve_episode(gen_base), gen_seed);
      emit(episode_to_text(ep), gen_out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::IoError ? kExitIo : kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
  return 0;
}
