#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "emsserve/cache.h"
#include "emsserve/clock.h"
#include "emsserve/episodes.h"
#include "emsserve/model_family.h"
#include "emsserve/netlink.h"
#include "emsserve/profiling.h"

namespace emsserve {

enum class Placement : std::uint8_t { Local, Edge };

enum class DecisionReason : std::uint8_t {
  RuleFavorsEdge,
  RuleFavorsLocal,
  Tie,
  EdgeDown,
  ProfileMiss,
  OffloadDisabled,
};

std::string_view to_string(Placement p);
Placement parse_placement(std::string_view s);
std::string_view to_string(DecisionReason r);

struct OffloadDecision {
  Placement placement = Placement::Local;
  double predicted_local = 0;             // t^g
  std::optional<double> predicted_edge;   // delta_t + t^e, nullopt if infeasible
  DecisionReason reason = DecisionReason::RuleFavorsLocal;
};

// Edge iff delta_t + t_edge < t_glass. Ties stay local; a missing edge
// profile or an unreachable link keeps the work local.
OffloadDecision decide_costs(double t_glass, std::optional<double> t_edge,
                             std::optional<double> delta_t);

// Looks up t^g and t^e for `module_cost_key` and predicts delta_t for
// `payload_bytes` from the heartbeat estimate. Throws UnservableModule if
// the module has no profile on `device`.
OffloadDecision decide(std::string_view module_cost_key, std::uint64_t payload_bytes,
                       const LatencyProfile& profile, const TransferEstimate& link_estimate,
                       std::string_view device = "glass", std::string_view edge = "edge-4c");

struct CachePolicy {
  // Sibling cache computations at least this expensive run concurrently
  // with the primary encoder; cheaper ones run after it.
  double parallel_threshold = 0.010;
};

struct WorkCosts {
  double primary = 0;
  std::vector<double> siblings;  // split by the policy threshold
  std::vector<double> serial;    // always sequential (on-demand recomputes)
  double header = 0;
};

// max(primary, parallel siblings) + serial siblings + serial + header.
double compute_latency(const WorkCosts& costs, const CachePolicy& policy);

struct TransferLegs {
  double up = 0;
  double down = 0;
};

// Local: compute_latency. Edge: up + compute_latency + down.
double accounted_latency(Placement placement, const WorkCosts& costs, const CachePolicy& policy,
                         const TransferLegs& legs = {});

// Bytes of one feature vector on the wire: 8 per element plus an envelope.
inline constexpr std::uint64_t kFeatureEnvelopeBytes = 64;
std::uint64_t feature_wire_bytes(std::size_t feature_dim);

// Counts encoder executions per (host, module, payload, version).
class ExecutionLog {
 public:
  struct Record {
    DeviceId host;
    std::string module_id;
    Modality modality = Modality::Text;
    std::string payload_id;
    std::uint64_t version = 0;
  };

  void record(Record r);
  const std::vector<Record>& records() const { return records_; }
  std::size_t count(std::string_view host, std::string_view module, std::string_view payload,
                    std::uint64_t version) const;
  // Largest number of executions of any single (host, module, payload, version).
  std::size_t max_repeats() const;
  std::size_t count_modality(Modality m) const;
  std::size_t count_host(std::string_view host) const;
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
};

struct SchedulerConfig {
  DeviceId device = "glass";
  DeviceId edge = "edge-4c";
  CachePolicy cache_policy;
  bool offload_enabled = false;
  double probe_interval = 1.0;
  std::uint64_t probe_bytes = 1024;
  std::string session_id = "session";
  std::uint64_t result_bytes = kFeatureEnvelopeBytes;  // recommendation envelope
};

struct ServeResult {
  std::optional<Recommendation> recommendation;  // nullopt: Pending
  double user_latency = 0;
  OffloadDecision decision;
  Placement placement = Placement::Local;  // where the step actually ran
  bool fell_back = false;                  // edge failed mid-step, re-run locally
  std::vector<CacheKey> caches_written;    // glass-side entries written this step
  std::uint64_t step = 0;
};

// One serving session on a device/edge pair: glass and edge caches, the
// heartbeat-driven offload decision, cache precomputation for sibling
// models and the crash fallback. Driven by a single control thread.
class Session {
 public:
  Session(ModelFamily family, LatencyProfile profile, std::optional<LinkTrace> link,
          SchedulerConfig config, std::shared_ptr<ExecutionClock> clock = nullptr);

  ServeResult serve(const ArrivalEvent& event);

  const CacheStore& glass_store() const { return *glass_; }
  const CacheStore& edge_store() const { return *edge_; }
  const ExecutionLog& executions() const { return log_; }
  // Maximum glass-cache staleness observed at step completion and at every
  // edge failure.
  std::uint64_t max_glass_staleness() const { return max_staleness_; }
  std::uint64_t global_step() const { return step_; }
  const ModelFamily& family() const { return family_; }
  const SchedulerConfig& config() const { return config_; }

 private:
  struct Unit {
    const ModelSpec* model = nullptr;
    const EncoderSpec* encoder = nullptr;
  };
  struct StepPlan {
    const ModelSpec* active = nullptr;
    std::vector<Unit> units;  // units[0] is the primary encoder
    Modality modality = Modality::Text;
    PayloadRef payload;
  };
  struct Execution {
    double latency = 0;
    std::vector<CacheEntry> produced;  // encoder outputs computed this step
    std::optional<Recommendation> recommendation;
  };

  StepPlan plan(const ArrivalEvent& event) const;
  double cost_on(std::string_view module, std::string_view host) const;
  WorkCosts costs_for(const StepPlan& plan, std::string_view host,
                      const std::vector<const EncoderSpec*>& on_demand) const;
  // Encoders (other than the arriving one) the active header needs that
  // `store` lacks for the latest payload.
  std::vector<Modality> missing_for_header(const StepPlan& plan, const CacheStore& store) const;
  Execution execute(const StepPlan& plan, CacheStore& store, const DeviceId& host,
                    const std::vector<Modality>& on_demand);
  ServeResult run_local(const StepPlan& plan, const OffloadDecision& decision, double waited);
  void observe_staleness();

  ModelFamily family_;
  LatencyProfile profile_;
  std::optional<LinkTrace> link_;
  SchedulerConfig config_;
  std::shared_ptr<ExecutionClock> clock_;
  std::unique_ptr<CacheStore> glass_;
  std::unique_ptr<CacheStore> edge_;
  ExecutionLog log_;
  std::array<bool, 3> observed_{};
  std::array<std::optional<PayloadRef>, 3> latest_{};
  std::uint64_t step_ = 0;
  std::uint64_t max_staleness_ = 0;
};

}  // namespace emsserve
