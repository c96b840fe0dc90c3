#include <doctest.h>

#include "emsserve/metrics.h"
#include "emsserve/runner.h"
#include "support.h"

using namespace emsserve;
using testsupport::error_kind;

namespace {

RunConfig synthetic_config() {
  RunConfig cfg;
  cfg.profile = preset_profile("fig7-synthetic");
  return cfg;
}

std::vector<std::optional<Recommendation>> recommendations(const RunReport& r) {
  std::vector<std::optional<Recommendation>> out;
  for (const auto& e : r.per_event) out.push_back(e.recommendation);
  return out;
}

}  // namespace

TEST_CASE("episode 1 closed-form totals") {
  RunConfig cfg = synthetic_config();
  RunReport base = run(builtin_episode(1), RunMode::Baseline, cfg);
  RunReport ems = run(builtin_episode(1), RunMode::EMSServe, cfg);
  CHECK(base.total_s == doctest::Approx(1.001 + 10 * 1.002 + 10 * 1.102).epsilon(1e-12));
  CHECK(ems.total_s == doctest::Approx(1.001 + 10 * 0.003 + 10 * 0.101).epsilon(1e-12));
  CHECK(base.total_s == doctest::Approx(22.041).epsilon(1e-12));
  CHECK(ems.total_s == doctest::Approx(2.041).epsilon(1e-12));
  CHECK(base.total_s / ems.total_s == doctest::Approx(10.80).epsilon(0.001));
}

TEST_CASE("runner totals match the role-based oracle for every episode and device") {
  for (std::string device : {"glass", "ph1", "edge-4c", "edge-64x"}) {
    RunConfig cfg;
    cfg.profile = preset_profile("devices");
    cfg.device = device;
    RoleCosts rc = device_role_costs(device);
    testsupport::Roles roles{rc.text, rc.vitals, rc.image, rc.header};
    for (int n = 1; n <= 3; ++n) {
      auto oracle = testsupport::standard_family_totals(builtin_sequence(n), roles);
      CHECK(run(builtin_episode(n), RunMode::Baseline, cfg).total_s == doctest::Approx(oracle.baseline).epsilon(1e-12));
      CHECK(run(builtin_episode(n), RunMode::EMSServe, cfg).total_s == doctest::Approx(oracle.emsserve).epsilon(1e-12));
    }
  }
}

TEST_CASE("report invariants") {
  RunConfig cfg = synthetic_config();
  for (int n = 1; n <= 3; ++n) {
    for (RunMode mode : {RunMode::Baseline, RunMode::EMSServe}) {
      RunReport r = run(builtin_episode(n), mode, cfg);
      REQUIRE(r.per_event.size() == 21);
      for (std::size_t i = 1; i < r.per_event.size(); ++i) {
        CHECK(r.per_event[i].latency_s > 0);
        CHECK(r.per_event[i].cumulative_s > r.per_event[i - 1].cumulative_s);
      }
      CHECK(r.total_s == r.per_event.back().cumulative_s);
      CHECK(r.mode == mode);
    }
  }
}

TEST_CASE("both modes give the same recommendations") {
  RunConfig cfg;
  cfg.profile = preset_profile("devices");
  cfg.offload_enabled = true;
  cfg.trace = load_trace_csv(testsupport::data_dir() / "traces" / "walk_with_crash.csv");
  for (int n = 1; n <= 3; ++n)
    CHECK(recommendations(run(builtin_episode(n), RunMode::Baseline, cfg)) ==
          recommendations(run(builtin_episode(n), RunMode::EMSServe, cfg)));
}

TEST_CASE("baseline reruns the text encoder on every arrival of episode 1") {
  RunOutcome out = run_detailed(builtin_episode(1), RunMode::Baseline, synthetic_config());
  CHECK(out.executions.count_modality(Modality::Text) == 21);
  RunOutcome ems = run_detailed(builtin_episode(1), RunMode::EMSServe, synthetic_config());
  CHECK(ems.executions.count_modality(Modality::Text) == 3);
  CHECK(ems.executions.max_repeats() == 1);
}

TEST_CASE("virtual runs are deterministic") {
  RunConfig cfg;
  cfg.profile = preset_profile("devices");
  cfg.seed = 7;
  std::string a = report_to_json_text(run(builtin_episode(2), RunMode::EMSServe, cfg));
  std::string b = report_to_json_text(run(builtin_episode(2), RunMode::EMSServe, cfg));
  CHECK(a == b);
}

TEST_CASE("fingerprints ignore the mode and track the config") {
  RunConfig cfg = synthetic_config();
  RunReport base = run(builtin_episode(1), RunMode::Baseline, cfg);
  RunReport ems = run(builtin_episode(1), RunMode::EMSServe, cfg);
  CHECK(base.config_fingerprint == ems.config_fingerprint);
  RunConfig other = cfg;
  other.seed = 1;
  CHECK(config_fingerprint(other) != config_fingerprint(cfg));
  other = cfg;
  other.cache_policy.parallel_threshold = 0.5;
  CHECK(config_fingerprint(other) != config_fingerprint(cfg));
}

TEST_CASE("seeds change the synthetic inputs") {
  RunConfig a = synthetic_config();
  RunConfig b = a;
  b.seed = 99;
  CHECK(recommendations(run(builtin_episode(1), RunMode::EMSServe, a)) !=
        recommendations(run(builtin_episode(1), RunMode::EMSServe, b)));
}

TEST_CASE("run validates its configuration") {
  RunConfig empty;
  CHECK(error_kind([&] { run(builtin_episode(1), RunMode::EMSServe, empty); }) == ErrorKind::ConfigError);
  RunConfig no_trace = synthetic_config();
  no_trace.offload_enabled = true;
  CHECK(error_kind([&] { run(builtin_episode(1), RunMode::EMSServe, no_trace); }) == ErrorKind::ConfigError);
  RunConfig wrong_device = synthetic_config();
  wrong_device.device = "ph1";
  CHECK(error_kind([&] { run(builtin_episode(1), RunMode::EMSServe, wrong_device); }) == ErrorKind::UnservableModule);
  CHECK(error_kind([&] { run(builtin_episode(1), RunMode::Baseline, wrong_device); }) == ErrorKind::UnservableModule);
}

TEST_CASE("mobility walk: offloading follows the distance") {
  // Out to 30 m at t = 10 and back to the access point at t = 20.
  RunConfig cfg;
  cfg.profile = preset_profile("devices");
  cfg.offload_enabled = true;
  DistanceTable table = load_distance_csv(testsupport::data_dir() / "distance_table.csv");
  cfg.trace = trace_from_walk(table, out_and_back_walk(30, 20), 1.0);
  Episode ep = builtin_episode(3);
  RunReport ems = run(ep, RunMode::EMSServe, cfg);
  RunReport base = run(ep, RunMode::Baseline, cfg);
  CHECK(recommendations(ems) == recommendations(base));
  CHECK(ems.total_s < base.total_s);
  REQUIRE(ems.per_event[6].modality == Modality::Image);
  REQUIRE(ems.per_event[10].modality == Modality::Image);
  REQUIRE(ems.per_event[20].modality == Modality::Image);
  CHECK(ems.per_event[6].placement == Placement::Edge);    // 18 m, 15 Mbps
  CHECK(ems.per_event[10].placement == Placement::Local);  // 30 m, 2 Mbps
  CHECK(ems.per_event[20].placement == Placement::Edge);   // back at the access point
}

TEST_CASE("wall clock runs complete with matching recommendations") {
  RunConfig cfg;
  cfg.profile = testsupport::standard_profile({0.01, 0.001, 0.005, 0.001});
  cfg.clock = ClockKind::Wall;
  cfg.wall_scale = 0.2;
  Episode ep = episode_from_sequence("short", "SVIVI");
  RunConfig virt = cfg;
  virt.clock = ClockKind::Virtual;
  CHECK(recommendations(run(ep, RunMode::EMSServe, cfg)) == recommendations(run(ep, RunMode::EMSServe, virt)));
}
