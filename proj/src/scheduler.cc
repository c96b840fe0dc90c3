#include "emsserve/scheduler.h"

#include <algorithm>
#include <map>

#include "emsserve/error.h"

namespace emsserve {

std::string_view to_string(Placement p) { return p == Placement::Edge ? "edge" : "local"; }

Placement parse_placement(std::string_view s) {
  if (s == "local") return Placement::Local;
  if (s == "edge") return Placement::Edge;
  fail(ErrorKind::SchemaError, "unknown placement '" + std::string(s) + "'");
}

std::string_view to_string(DecisionReason r) {
  switch (r) {
    case DecisionReason::RuleFavorsEdge: return "rule-favors-edge";
    case DecisionReason::RuleFavorsLocal: return "rule-favors-local";
    case DecisionReason::Tie: return "tie";
    case DecisionReason::EdgeDown: return "edge-down";
    case DecisionReason::ProfileMiss: return "profile-miss";
    case DecisionReason::OffloadDisabled: return "offload-disabled";
  }
  return "?";
}

OffloadDecision decide_costs(double t_glass, std::optional<double> t_edge,
                             std::optional<double> delta_t) {
  OffloadDecision d;
  d.predicted_local = t_glass;
  if (!delta_t) {
    d.reason = DecisionReason::EdgeDown;
    return d;
  }
  if (!t_edge) {
    d.reason = DecisionReason::ProfileMiss;
    return d;
  }
  const double edge_total = *delta_t + *t_edge;
  d.predicted_edge = edge_total;
  if (edge_total < t_glass) {
    d.placement = Placement::Edge;
    d.reason = DecisionReason::RuleFavorsEdge;
  } else if (edge_total == t_glass) {
    d.reason = DecisionReason::Tie;
  } else {
    d.reason = DecisionReason::RuleFavorsLocal;
  }
  return d;
}

OffloadDecision decide(std::string_view module_cost_key, std::uint64_t payload_bytes,
                       const LatencyProfile& profile, const TransferEstimate& link_estimate,
                       std::string_view device, std::string_view edge) {
  auto t_glass = profile.find(module_cost_key, device);
  if (!t_glass)
    fail(ErrorKind::UnservableModule, std::string(module_cost_key) + " has no profile on " +
                                          std::string(device));
  return decide_costs(*t_glass, profile.find(module_cost_key, edge),
                      link_estimate.predict(payload_bytes));
}

double compute_latency(const WorkCosts& costs, const CachePolicy& policy) {
  double concurrent = costs.primary;
  std::vector<double> sequential;
  for (double s : costs.siblings) {
    if (s >= policy.parallel_threshold)
      concurrent = std::max(concurrent, s);
    else
      sequential.push_back(s);
  }
  double total = concurrent;
  for (double s : sequential) total += s;
  for (double s : costs.serial) total += s;
  return total + costs.header;
}

double accounted_latency(Placement placement, const WorkCosts& costs, const CachePolicy& policy,
                         const TransferLegs& legs) {
  const double compute = compute_latency(costs, policy);
  if (placement == Placement::Local) return compute;
  return legs.up + compute + legs.down;
}

std::uint64_t feature_wire_bytes(std::size_t feature_dim) {
  return 8 * static_cast<std::uint64_t>(feature_dim) + kFeatureEnvelopeBytes;
}

void ExecutionLog::record(Record r) { records_.push_back(std::move(r)); }

std::size_t ExecutionLog::count(std::string_view host, std::string_view module,
                                std::string_view payload, std::uint64_t version) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const Record& r) {
    return r.host == host && r.module_id == module && r.payload_id == payload && r.version == version;
  }));
}

std::size_t ExecutionLog::max_repeats() const {
  std::map<std::tuple<std::string, std::string, std::string, std::uint64_t>, std::size_t> seen;
  std::size_t worst = 0;
  for (const auto& r : records_)
    worst = std::max(worst, ++seen[{r.host, r.module_id, r.payload_id, r.version}]);
  return worst;
}

std::size_t ExecutionLog::count_modality(Modality m) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [m](const Record& r) { return r.modality == m; }));
}

std::size_t ExecutionLog::count_host(std::string_view host) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [host](const Record& r) { return r.host == host; }));
}

Session::Session(ModelFamily family, LatencyProfile profile, std::optional<LinkTrace> link,
                 SchedulerConfig config, std::shared_ptr<ExecutionClock> clock)
    : family_(std::move(family)),
      profile_(std::move(profile)),
      link_(std::move(link)),
      config_(std::move(config)),
      clock_(clock ? std::move(clock) : std::make_shared<VirtualClock>()),
      glass_(std::make_unique<CacheStore>(config_.device)),
      edge_(std::make_unique<CacheStore>(config_.edge)) {
  if (family_.models().empty()) fail(ErrorKind::ConfigError, "session needs a model family");
  if (!(config_.cache_policy.parallel_threshold > 0))
    fail(ErrorKind::ConfigError, "parallel_threshold must be positive");
  if (!(config_.probe_interval > 0)) fail(ErrorKind::ConfigError, "probe interval must be positive");
  if (config_.offload_enabled && config_.device == config_.edge)
    fail(ErrorKind::ConfigError, "device and edge must differ when offloading");
}

Session::StepPlan Session::plan(const ArrivalEvent& event) const {
  StepPlan p;
  p.modality = event.modality;
  p.payload = *latest_[static_cast<std::size_t>(event.modality)];
  p.active = family_.active_model(observed_);
  const std::size_t active_size = p.active ? p.active->encoders.size() : 0;
  // Models smaller than the active one can never become active again, so
  // their caches are not worth computing.
  for (const auto& m : family_.models()) {
    const EncoderSpec* enc = m.encoder_for(event.modality);
    if (!enc || m.encoders.size() < active_size) continue;
    if (&m == p.active)
      p.units.insert(p.units.begin(), Unit{&m, enc});
    else
      p.units.push_back(Unit{&m, enc});
  }
  if (p.units.empty())
    fail(ErrorKind::UnservableModule, "no model in the family consumes " +
                                          std::string(to_string(event.modality)));
  return p;
}

double Session::cost_on(std::string_view module, std::string_view host) const {
  if (auto v = profile_.find(module, host)) return *v;
  if (host == config_.device)
    fail(ErrorKind::UnservableModule,
         std::string(module) + " has no profile on " + std::string(host));
  fail(ErrorKind::ProfileMiss, std::string(module) + " has no profile on " + std::string(host));
}

namespace {

bool holds(const CacheStore& store, const CacheKey& key, const PayloadRef& payload) {
  auto e = store.get_shared(key);
  return e && e->payload_id == payload.payload_id && e->features.payload_version == payload.version;
}

}  // namespace

std::vector<Modality> Session::missing_for_header(const StepPlan& plan,
                                                  const CacheStore& store) const {
  std::vector<Modality> missing;
  if (!plan.active) return missing;
  for (const auto& e : plan.active->encoders) {
    if (e.modality == plan.modality) continue;  // computed this step
    const auto& latest = latest_[static_cast<std::size_t>(e.modality)];
    CacheKey key{plan.active->model_id, e.modality, config_.session_id};
    if (!holds(store, key, *latest)) missing.push_back(e.modality);
  }
  return missing;
}

WorkCosts Session::costs_for(const StepPlan& plan, std::string_view host,
                             const std::vector<const EncoderSpec*>& on_demand) const {
  WorkCosts c;
  bool first = true;
  for (const auto& u : plan.units) {
    double cost = cost_on(u.encoder->module_id, host);
    if (first) {
      c.primary = cost;
      first = false;
    } else {
      c.siblings.push_back(cost);
    }
  }
  for (const auto* e : on_demand) c.serial.push_back(cost_on(e->module_id, host));
  if (plan.active) c.header = cost_on(plan.active->header_id, host);
  return c;
}

Session::Execution Session::execute(const StepPlan& full_plan, CacheStore& store,
                                    const DeviceId& host, const std::vector<Modality>& on_demand) {
  StepPlan plan = full_plan;
  std::erase_if(plan.units, [&](const Unit& u) {
    return holds(store, {u.model->model_id, plan.modality, config_.session_id}, plan.payload);
  });

  struct Job {
    const ModelSpec* model;
    const EncoderSpec* encoder;
    PayloadRef payload;
    FeatureVector out;
  };
  std::vector<Job> jobs;
  for (const auto& u : plan.units) jobs.push_back({u.model, u.encoder, plan.payload, {}});
  const std::size_t n_units = jobs.size();
  for (Modality mod : on_demand)
    jobs.push_back({plan.active, plan.active->encoder_for(mod),
                    *latest_[static_cast<std::size_t>(mod)], {}});

  Execution out;
  std::vector<Task> concurrent;
  std::vector<Task> sequential;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Job& job = jobs[i];
    Task t{cost_on(job.encoder->module_id, host), [&job] {
             job.out = eval_encoder(*job.encoder, job.payload.payload_id, job.payload.version);
           }};
    if (i == 0 && n_units > 0)
      concurrent.push_back(std::move(t));
    else if (i < n_units && t.cost >= config_.cache_policy.parallel_threshold)
      concurrent.push_back(std::move(t));
    else
      sequential.push_back(std::move(t));
  }
  if (plan.active) {
    const ModelSpec& active = *plan.active;
    sequential.push_back(Task{cost_on(active.header_id, host), [&] {
      std::map<Modality, FeatureVector> features;
      for (const auto& e : active.encoders) {
        auto job = std::find_if(jobs.begin(), jobs.end(), [&](const Job& j) {
          return j.model == &active && j.encoder->modality == e.modality;
        });
        if (job != jobs.end()) {
          features.emplace(e.modality, job->out);
          continue;
        }
        auto cached = store.get_shared({active.model_id, e.modality, config_.session_id});
        if (!cached)
          fail(ErrorKind::MissingModality, host + " has no cached " +
                                               std::string(to_string(e.modality)) + " for " +
                                               active.model_id);
        features.emplace(e.modality, cached->features);
      }
      out.recommendation = eval_header(active, features, step_);
    }});
  }

  out.latency = clock_->run(concurrent, sequential);

  for (auto& job : jobs) {
    log_.record({host, job.encoder->module_id, job.encoder->modality, job.payload.payload_id,
                 job.payload.version});
    CacheEntry entry{{job.model->model_id, job.encoder->modality, config_.session_id},
                     std::move(job.out), job.payload.payload_id, step_};
    store.put(entry);
    out.produced.push_back(std::move(entry));
  }
  return out;
}

void Session::observe_staleness() {
  max_staleness_ = std::max(max_staleness_, staleness(*glass_, step_));
}

ServeResult Session::run_local(const StepPlan& plan, const OffloadDecision& decision,
                               double waited) {
  Execution exec = execute(plan, *glass_, config_.device, missing_for_header(plan, *glass_));
  glass_->mark_synced(step_);
  ServeResult r;
  r.recommendation = std::move(exec.recommendation);
  r.user_latency = waited + exec.latency;
  r.decision = decision;
  r.placement = Placement::Local;
  r.step = step_;
  for (const auto& e : exec.produced) r.caches_written.push_back(e.key);
  return r;
}

ServeResult Session::serve(const ArrivalEvent& event) {
  if (event.index <= step_)
    fail(ErrorKind::InvalidArgs, "event " + std::to_string(event.index) +
                                     " does not advance past step " + std::to_string(step_));
  const auto slot = static_cast<std::size_t>(event.modality);
  step_ = event.index;
  observed_[slot] = true;
  latest_[slot] = PayloadRef{event.payload_id, 0};

  const StepPlan p = plan(event);
  const std::string& primary = p.units.front().encoder->module_id;
  // Every placement must at least be servable on the device.
  const WorkCosts local_costs = costs_for(p, config_.device, {});

  OffloadDecision decision;
  if (!config_.offload_enabled || !link_) {
    decision.predicted_local = local_costs.primary;
    decision.reason = DecisionReason::OffloadDisabled;
  } else {
    TransferEstimate est = heartbeat_estimate(*link_, event.arrival_offset,
                                              config_.probe_interval, config_.probe_bytes);
    decision = decide(primary, event.payload_bytes, profile_, est, config_.device, config_.edge);
  }

  std::optional<WorkCosts> edge_costs;
  std::vector<Modality> uploads;
  std::vector<Modality> edge_on_demand;
  if (decision.placement == Placement::Edge) {
    for (Modality mod : missing_for_header(p, *edge_)) {
      CacheKey key{p.active->model_id, mod, config_.session_id};
      if (holds(*glass_, key, *latest_[static_cast<std::size_t>(mod)]))
        uploads.push_back(mod);
      else
        edge_on_demand.push_back(mod);
    }
    std::vector<const EncoderSpec*> demand_specs;
    for (Modality mod : edge_on_demand) demand_specs.push_back(p.active->encoder_for(mod));
    try {
      edge_costs = costs_for(p, config_.edge, demand_specs);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ProfileMiss) throw;
      decision.placement = Placement::Local;
      decision.reason = DecisionReason::ProfileMiss;
    }
  }

  if (decision.placement == Placement::Local) {
    ServeResult r = run_local(p, decision, 0.0);
    observe_staleness();
    return r;
  }

  // Edge path: plan the transfer timeline from the profiled costs, then
  // either commit it or fall back when the edge goes away mid-step.
  std::uint64_t up_bytes = event.payload_bytes;
  for (Modality mod : uploads) up_bytes += feature_wire_bytes(p.active->encoder_for(mod)->feature_dim);
  std::uint64_t down_bytes = p.active ? config_.result_bytes : 0;
  for (const auto& u : p.units) down_bytes += feature_wire_bytes(u.encoder->feature_dim);
  for (Modality mod : edge_on_demand)
    down_bytes += feature_wire_bytes(p.active->encoder_for(mod)->feature_dim);

  const double t0 = event.arrival_offset;
  const double compute = compute_latency(*edge_costs, config_.cache_policy);
  std::optional<double> fail_at;
  std::optional<double> up = transfer_time(*link_, up_bytes, t0);
  std::optional<double> down;
  if (!up) {
    fail_at = t0;
  } else {
    down = transfer_time(*link_, down_bytes, t0 + *up + compute);
    if (!down)
      fail_at = t0 + *up + compute;
    else
      fail_at = link_->first_down_in(t0, t0 + *up + compute + *down);
  }

  if (fail_at) {
    if (link_->in_crash(*fail_at)) edge_->clear();  // the edge restarts empty
    observe_staleness();
    double waited = clock_->wait(*fail_at - t0);
    ServeResult r = run_local(p, decision, waited);
    r.fell_back = true;
    observe_staleness();
    return r;
  }

  for (Modality mod : uploads)
    edge_->put(*glass_->get({p.active->model_id, mod, config_.session_id}));

  double latency = clock_->wait(*up);
  Execution exec = execute(p, *edge_, config_.edge, edge_on_demand);
  latency += exec.latency;
  latency += clock_->wait(*down);

  ServeResult r;
  for (auto& entry : exec.produced) {
    r.caches_written.push_back(entry.key);
    glass_->put(std::move(entry));
  }
  glass_->mark_synced(step_);
  r.recommendation = std::move(exec.recommendation);
  r.user_latency = latency;
  r.decision = decision;
  r.placement = Placement::Edge;
  r.step = step_;
  observe_staleness();
  return r;
}

}  // namespace emsserve
