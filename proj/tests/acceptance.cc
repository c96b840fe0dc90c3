// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "emsserve/medkit.h"
#include "emsserve/metrics.h"
#include "emsserve/runner.h"
#include "emsserve/scheduler.h"
#include "support.h"

using namespace emsserve;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail << "first failure: " << what << "; ";
    ok = ok && cond;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<Recommendation> ready_recommendations(const RunReport& r) {
  std::vector<Recommendation> out;
  for (const auto& e : r.per_event)
    if (e.recommendation) out.push_back(*e.recommendation);
  return out;
}

LatencyProfile two_host_profile() {
  LatencyProfile p = expand_role_costs(ModelFamily::standard(), "glass", device_role_costs("glass"));
  p.merge(expand_role_costs(ModelFamily::standard(), "edge-4c", device_role_costs("edge-4c")));
  return p;
}

void speedup_range(Verdict& v) {
  const auto start = Clock::now();
  RunConfig cfg;
  cfg.profile = preset_profile("fig7-synthetic");
  Comparison c = speedup(run(builtin_episode(1), RunMode::Baseline, cfg),
                         run(builtin_episode(1), RunMode::EMSServe, cfg));
  v.require(std::abs(c.baseline_total_s - 22.041) < 1e-9, "baseline total 22.041");
  v.require(std::abs(c.emsserve_total_s - 2.041) < 1e-9, "emsserve total 2.041");
  v.require(std::abs(c.speedup - 10.80) <= 0.01, "speedup 10.80");
  v.detail << "ep1 " << c.baseline_total_s << "/" << c.emsserve_total_s << " = " << c.speedup << "x;";

  double lo = 1e9, hi = 0;
  for (std::string device : {"glass", "ph1", "edge-4c", "edge-64x"}) {
    RunConfig dc;
    dc.profile = preset_profile("devices");
    dc.device = device;
    RoleCosts rc = device_role_costs(device);
    for (int n = 1; n <= 3; ++n) {
      Comparison d = speedup(run(builtin_episode(n), RunMode::Baseline, dc),
                             run(builtin_episode(n), RunMode::EMSServe, dc));
      auto oracle = testsupport::standard_family_totals(builtin_sequence(n), {rc.text, rc.vitals, rc.image, rc.header});
      v.require(std::abs(d.baseline_total_s - oracle.baseline) < 1e-9 &&
                    std::abs(d.emsserve_total_s - oracle.emsserve) < 1e-9,
                device + " episode " + std::to_string(n) + " totals match the oracle");
      v.require(d.speedup >= 1.9 && d.speedup <= 11.7, device + " episode " + std::to_string(n) + " in band");
      lo = std::min(lo, d.speedup);
      hi = std::max(hi, d.speedup);
    }
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 1.0, "runtime < 1 s");
  v.detail << " presets " << lo << "x.." << hi << "x; " << elapsed << " s";
}

void cache_transparency(Verdict& v) {
  const auto start = Clock::now();
  RunConfig cfg;
  cfg.profile = preset_profile("devices");
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    cfg.seed = static_cast<std::uint64_t>(i);
    Episode ep = random_episode(static_cast<std::uint64_t>(i));
    v.require(ready_recommendations(run(ep, RunMode::Baseline, cfg)) ==
                  ready_recommendations(run(ep, RunMode::EMSServe, cfg)),
              "seed " + std::to_string(i));
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 30.0, "runtime < 30 s");
  v.detail << n << " episodes; " << elapsed << " s";
}

void non_recomputation(Verdict& v) {
  RunConfig local;
  local.profile = preset_profile("devices");
  RunConfig offload = local;
  offload.profile = two_host_profile();
  offload.offload_enabled = true;
  offload.trace = load_trace_csv(testsupport::data_dir() / "traces" / "walk_with_crash.csv");
  for (int n = 1; n <= 3; ++n) {
    v.require(run_detailed(builtin_episode(n), RunMode::EMSServe, local).executions.max_repeats() <= 1,
              "local episode " + std::to_string(n));
    v.require(run_detailed(builtin_episode(n), RunMode::EMSServe, offload).executions.max_repeats() <= 1,
              "offloaded episode " + std::to_string(n));
  }
  RunConfig synth;
  synth.profile = preset_profile("fig7-synthetic");
  const auto text_runs = run_detailed(builtin_episode(1), RunMode::Baseline, synth).executions.count_modality(Modality::Text);
  v.require(text_runs == 21, "baseline text executions == 21");
  v.detail << "baseline ep1 text encoder runs " << text_runs;
}

void offload_rule(Verdict& v) {
  const std::array<double, 6> grid{0, 1e-3, 1e-2, 1e-1, 1, 10};
  int agree = 0;
  for (double dt : grid)
    for (double te : grid)
      for (double tg : grid) {
        const bool edge = dt + te < tg;
        if ((decide_costs(tg, te, dt).placement == Placement::Edge) == edge) ++agree;
      }
  int down_local = 0;
  for (double tg : grid)
    if (decide_costs(tg, 0.0, std::nullopt).placement == Placement::Local) ++down_local;
  v.require(agree == 216, "grid agreement");
  v.require(down_local == 6, "down link stays local");
  v.detail << agree << "/216";
}

void fault_tolerance(Verdict& v) {
  Episode ep = builtin_episode(1);
  SchedulerConfig cfg;
  cfg.offload_enabled = true;
  Session clean(ModelFamily::standard(), two_host_profile(), LinkTrace::constant(1e8), cfg);
  std::vector<std::optional<Recommendation>> expected;
  int clean_edge = 0;
  for (const auto& ev : ep.events) {
    ServeResult r = clean.serve(ev);
    expected.push_back(r.recommendation);
    clean_edge += r.placement == Placement::Edge;
  }
  v.require(clean_edge == 21, "clean run offloads every step");
  std::uint64_t worst = 0;
  int fallbacks = 0;
  for (std::size_t k = 0; k < ep.events.size(); ++k) {
    const double t = ep.events[k].arrival_offset;
    Session s(ModelFamily::standard(), two_host_profile(),
              LinkTrace::constant(1e8, {{t + 1e-4, t + 0.5}}), cfg);
    std::size_t served = 0;
    for (std::size_t i = 0; i < ep.events.size(); ++i) {
      ServeResult r = s.serve(ep.events[i]);
      v.require(r.recommendation == expected[i], "crash at step " + std::to_string(k + 1));
      fallbacks += r.fell_back;
      ++served;
    }
    v.require(served == ep.events.size(), "all events served");
    worst = std::max(worst, s.max_glass_staleness());
  }
  v.require(worst <= 1, "staleness <= 1");
  v.require(fallbacks == 21, "one fallback per crash run");
  v.detail << "21 runs, " << fallbacks << " fallbacks, max staleness " << worst;
}

void crossover(Verdict& v) {
  // One decade, 9 Mbps down to 0.9 Mbps, 20 geometric steps.
  RunConfig cfg;
  cfg.profile = two_host_profile();
  cfg.offload_enabled = true;
  Episode ep = builtin_episode(2);
  std::vector<Placement> image, vitals;
  for (int i = 0; i < 20; ++i) {
    const double bw = 9e6 * std::pow(10.0, -static_cast<double>(i) / 19.0);
    cfg.trace = LinkTrace::constant(bw);
    RunReport r = run(ep, RunMode::EMSServe, cfg);
    std::map<Modality, std::set<Placement>> seen;
    for (const auto& e : r.per_event) seen[e.modality].insert(e.placement);
    v.require(seen[Modality::Image].size() == 1, "image events share one placement per bandwidth");
    v.require(seen[Modality::Vitals].size() == 1, "vitals events share one placement per bandwidth");
    image.push_back(*seen[Modality::Image].begin());
    vitals.push_back(*seen[Modality::Vitals].begin());
  }
  int transitions = 0;
  for (std::size_t i = 1; i < image.size(); ++i) {
    if (image[i] != image[i - 1]) {
      ++transitions;
      v.require(image[i - 1] == Placement::Edge && image[i] == Placement::Local, "Edge to Local");
    }
  }
  v.require(image.front() == Placement::Edge && image.back() == Placement::Local, "endpoints");
  v.require(transitions == 1, "exactly one image transition");
  v.require(std::all_of(vitals.begin(), vitals.end(), [&](Placement p) { return p == vitals.front(); }),
            "vitals placement constant");
  v.detail << "image transitions " << transitions << ", vitals " << to_string(vitals.front());
}

void profiler_protocol(Verdict& v) {
  std::vector<std::chrono::nanoseconds> seq{std::chrono::milliseconds(100)};
  for (int i = 0; i < 14; ++i) seq.push_back(std::chrono::milliseconds(10));
  std::size_t i = 0;
  const double m = measure([&] { return seq.at(i++); });
  v.require(m == 0.010, "mean of last 10 is 0.010");
  v.require(i == 15, "15 runs");
  v.detail << "measure = " << m;
}

void medkit(Verdict& v) {
  v.require(med_math(21, 4.2).volume_ml == 5.0, "med_math(21, 4.2) == 5.0");

  std::mt19937_64 rng(31337);
  for (int k = 0; k < 10000; ++k) {
    std::u32string a = testsupport::random_u32(rng, 20), b = testsupport::random_u32(rng, 20);
    if (levenshtein(testsupport::encode_utf8(a), testsupport::encode_utf8(b)) !=
        testsupport::full_dp_levenshtein(a, b)) {
      v.require(false, "levenshtein pair " + std::to_string(k));
      break;
    }
  }

  int matched = 0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<MedEntry> entries;
    std::vector<std::u32string> names;
    const std::size_t size = 1 + rng() % 8;
    while (names.size() < size) {
      std::u32string name = testsupport::random_u32(rng, 10);
      if (name.empty() || std::find(names.begin(), names.end(), name) != names.end()) continue;
      names.push_back(name);
      entries.push_back({testsupport::encode_utf8(name), {}, {}});
    }
    MedsDictionary dict(entries);
    std::u32string token = testsupport::random_u32(rng, 10);

    std::optional<std::size_t> best;
    std::size_t best_d = 0;
    for (std::size_t j = 0; j < names.size(); ++j) {
      std::size_t d = testsupport::full_dp_levenshtein(token, names[j]);
      if (!best || d < best_d || (d == best_d && entries[j].name < entries[*best].name)) {
        best = j;
        best_d = d;
      }
    }
    const bool accept = best_d == 0 || 100 * (best_d - 1) < 34 * names[*best].size();
    auto got = ed_match(testsupport::encode_utf8(token), dict);
    bool same = got.has_value() == accept;
    if (same && got) same = got->entry->name == entries[*best].name && got->distance == best_d;
    v.require(same, "ed_match case " + std::to_string(k));
    matched += got.has_value();
  }
  v.detail << "10000 levenshtein pairs, 1000 ed_match cases (" << matched << " accepted)";
}

std::optional<std::string> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(Verdict& v) {
  testsupport::TempDir dir;
  std::array<std::optional<std::string>, 2> out;
  for (int i = 0; i < 2; ++i) {
    const auto path = dir / ("report-" + std::to_string(i) + ".json");
    const std::string cmd = std::string("\"") + EMSSERVE_CLI +
                            "\" run --episode 2 --mode emsserve --seed 7 --clock virtual --out \"" +
                            path.string() + "\"";
    v.require(std::system(cmd.c_str()) == 0, "cli exit status");
    out[i] = slurp(path);
  }
  v.require(out[0].has_value() && out[1].has_value(), "reports written");
  v.require(out[0] == out[1], "byte-identical reports");
  v.detail << (out[0] ? out[0]->size() : 0) << " bytes each";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"speedup range", speedup_range},
      {"cache transparency", cache_transparency},
      {"encoder non-recomputation", non_recomputation},
      {"offload rule oracle", offload_rule},
      {"fault tolerance", fault_tolerance},
      {"bandwidth crossover", crossover},
      {"profiler protocol", profiler_protocol},
      {"medkit", medkit},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    failed += !v.ok;
    std::cout << (v.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << v.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
