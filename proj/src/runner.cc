#include "emsserve/runner.h"

#include <array>
#include <map>
#include <memory>

#include <json.hpp>

#include "emsserve/error.h"
#include "emsserve/hashing.h"

namespace emsserve {

std::string_view to_string(RunMode m) { return m == RunMode::Baseline ? "baseline" : "emsserve"; }

RunMode parse_run_mode(std::string_view s) {
  if (s == "baseline") return RunMode::Baseline;
  if (s == "emsserve") return RunMode::EMSServe;
  fail(ErrorKind::InvalidArgs, "mode must be baseline or emsserve, got '" + std::string(s) + "'");
}

std::string_view to_string(ClockKind c) { return c == ClockKind::Wall ? "wall" : "virtual"; }

ClockKind parse_clock_kind(std::string_view s) {
  if (s == "virtual") return ClockKind::Virtual;
  if (s == "wall") return ClockKind::Wall;
  fail(ErrorKind::InvalidArgs, "clock must be virtual or wall, got '" + std::string(s) + "'");
}

std::string config_fingerprint(const RunConfig& c) {
  nlohmann::json j;
  j["family"] = family_to_json_text(c.family);
  j["profile"] = profile_to_json_text(c.profile);
  j["device"] = c.device;
  j["edge"] = c.edge;
  j["trace"] = c.trace ? nlohmann::json(trace_to_csv(*c.trace)) : nlohmann::json(nullptr);
  j["clock"] = to_string(c.clock);
  j["wall_scale"] = c.wall_scale;
  j["parallel_threshold"] = c.cache_policy.parallel_threshold;
  j["offload"] = c.offload_enabled;
  j["seed"] = c.seed;
  j["probe_interval"] = c.probe_interval;
  j["probe_bytes"] = c.probe_bytes;
  j["result_bytes"] = c.result_bytes;
  return hex64(fnv1a(j.dump()));
}

namespace {

std::string salted(std::uint64_t seed, const std::string& payload_id) {
  return "s" + std::to_string(seed) + "/" + payload_id;
}

std::shared_ptr<ExecutionClock> make_clock(const RunConfig& c) {
  if (c.clock == ClockKind::Wall) return std::make_shared<WallClock>(c.wall_scale);
  return std::make_shared<VirtualClock>();
}

double device_cost(const RunConfig& c, const std::string& module) {
  auto v = c.profile.find(module, c.device);
  if (!v) fail(ErrorKind::UnservableModule, module + " has no profile on " + c.device);
  return *v;
}

// Direct execution: every arrival reruns every encoder of the active model
// on the device, then its header. Before any model is complete, each
// observed modality is re-encoded for every model that consumes it.
RunOutcome run_baseline(const Episode& episode, const RunConfig& c) {
  RunOutcome out;
  auto clock = make_clock(c);
  std::array<bool, 3> observed{};
  std::map<Modality, PayloadRef> latest;
  double cumulative = 0;

  for (const auto& ev : episode.events) {
    observed[static_cast<std::size_t>(ev.modality)] = true;
    latest[ev.modality] = PayloadRef{salted(c.seed, ev.payload_id), 0};
    const ModelSpec* active = c.family.active_model(observed);

    struct Job {
      const EncoderSpec* encoder;
      PayloadRef payload;
      FeatureVector out;
    };
    std::vector<Job> jobs;
    if (active) {
      for (const auto& e : active->encoders) jobs.push_back({&e, latest.at(e.modality), {}});
    } else {
      for (Modality m : kAllModalities) {
        if (!observed[static_cast<std::size_t>(m)]) continue;
        for (const auto& model : c.family.models())
          if (const auto* e = model.encoder_for(m)) jobs.push_back({e, latest.at(m), {}});
      }
    }

    std::vector<Task> none;
    std::vector<Task> tasks;
    for (auto& job : jobs)
      tasks.push_back({device_cost(c, job.encoder->module_id), [&job] {
                         job.out = eval_encoder(*job.encoder, job.payload.payload_id,
                                                job.payload.version);
                       }});
    std::optional<Recommendation> rec;
    if (active) {
      tasks.push_back({device_cost(c, active->header_id), [&] {
                         std::map<Modality, FeatureVector> features;
                         for (const auto& job : jobs) features.emplace(job.encoder->modality, job.out);
                         rec = eval_header(*active, features, ev.index);
                       }});
    }
    const double latency = clock->run(none, tasks);
    for (const auto& job : jobs)
      out.executions.record({c.device, job.encoder->module_id, job.encoder->modality,
                             job.payload.payload_id, job.payload.version});

    cumulative += latency;
    out.report.per_event.push_back(
        {ev.index, ev.modality, Placement::Local, latency, cumulative, std::move(rec)});
  }
  return out;
}

RunOutcome run_emsserve(const Episode& episode, const RunConfig& c) {
  SchedulerConfig sc;
  sc.device = c.device;
  sc.edge = c.edge;
  sc.cache_policy = c.cache_policy;
  sc.offload_enabled = c.offload_enabled;
  sc.probe_interval = c.probe_interval;
  sc.probe_bytes = c.probe_bytes;
  sc.result_bytes = c.result_bytes;
  sc.session_id = "session-" + std::to_string(c.seed);
  Session session(c.family, c.profile, c.trace, sc, make_clock(c));

  RunOutcome out;
  double cumulative = 0;
  for (ArrivalEvent ev : episode.events) {
    ev.payload_id = salted(c.seed, ev.payload_id);
    ServeResult r = session.serve(ev);
    cumulative += r.user_latency;
    out.report.per_event.push_back(
        {ev.index, ev.modality, r.placement, r.user_latency, cumulative, r.recommendation});
    out.results.push_back(std::move(r));
  }
  out.executions = session.executions();
  out.max_glass_staleness = session.max_glass_staleness();
  return out;
}

}  // namespace

RunOutcome run_detailed(const Episode& episode, RunMode mode, const RunConfig& config) {
  validate_episode(episode);
  if (config.profile.empty()) fail(ErrorKind::ConfigError, "run needs a latency profile");
  if (config.offload_enabled && !config.trace)
    fail(ErrorKind::ConfigError, "offloading needs a bandwidth trace");
  if (config.clock == ClockKind::Wall && !(config.wall_scale > 0))
    fail(ErrorKind::ConfigError, "wall clock scale must be positive");

  RunOutcome out = mode == RunMode::Baseline ? run_baseline(episode, config)
                                             : run_emsserve(episode, config);
  out.report.episode_id = episode.episode_id;
  out.report.mode = mode;
  out.report.config_fingerprint = config_fingerprint(config);
  out.report.total_s = out.report.per_event.empty() ? 0 : out.report.per_event.back().cumulative_s;
  return out;
}

RunReport run(const Episode& episode, RunMode mode, const RunConfig& config) {
  return run_detailed(episode, mode, config).report;
}

}  // namespace emsserve
