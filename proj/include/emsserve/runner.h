#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emsserve/episodes.h"
#include "emsserve/model_family.h"
#include "emsserve/netlink.h"
#include "emsserve/profiling.h"
#include "emsserve/scheduler.h"

namespace emsserve {

enum class RunMode : std::uint8_t { Baseline, EMSServe };
enum class ClockKind : std::uint8_t { Virtual, Wall };

std::string_view to_string(RunMode m);
RunMode parse_run_mode(std::string_view s);
std::string_view to_string(ClockKind c);
ClockKind parse_clock_kind(std::string_view s);

struct RunConfig {
  ModelFamily family = ModelFamily::standard();
  LatencyProfile profile;
  DeviceId device = "glass";
  DeviceId edge = "edge-4c";
  std::optional<LinkTrace> trace;
  ClockKind clock = ClockKind::Virtual;
  double wall_scale = 1.0;
  CachePolicy cache_policy;
  bool offload_enabled = false;
  // Salts every payload id, so different seeds see different synthetic
  // inputs for the same arrival sequence.
  std::uint64_t seed = 0;
  double probe_interval = 1.0;
  std::uint64_t probe_bytes = 1024;
  std::uint64_t result_bytes = kFeatureEnvelopeBytes;
};

struct EventRecord {
  std::uint64_t index = 0;
  Modality modality = Modality::Text;
  Placement placement = Placement::Local;
  double latency_s = 0;
  double cumulative_s = 0;
  std::optional<Recommendation> recommendation;  // nullopt: Pending

  bool operator==(const EventRecord&) const = default;
};

struct RunReport {
  std::string episode_id;
  RunMode mode = RunMode::EMSServe;
  std::string config_fingerprint;
  std::vector<EventRecord> per_event;
  double total_s = 0;

  bool operator==(const RunReport&) const = default;
};

struct RunOutcome {
  RunReport report;
  ExecutionLog executions;
  std::uint64_t max_glass_staleness = 0;
  std::vector<ServeResult> results;  // EMSServe mode only
};

// Hash of everything that shapes a run except the mode.
std::string config_fingerprint(const RunConfig& config);

// Throws ConfigError for an empty profile or offloading without a trace;
// UnservableModule propagates from the scheduler.
RunOutcome run_detailed(const Episode& episode, RunMode mode, const RunConfig& config);
RunReport run(const Episode& episode, RunMode mode, const RunConfig& config);

}  // namespace emsserve
